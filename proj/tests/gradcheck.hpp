#pragma once

#include "gradient_check.hpp"

#include <gtest/gtest.h>

#define EXPECT_GRADIENTS_MATCH(params, ...)                                                    \
    do {                                                                                           \
        const auto gc_result_ = ::hexpert::testing::gradient_check((params), (__VA_ARGS__));           \
        EXPECT_LE(gc_result_.worst_relative, 1e-4) << gc_result_.worst_entry;                      \
    } while (0)
