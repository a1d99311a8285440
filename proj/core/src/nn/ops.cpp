#include <hexpert/nn/ops.hpp>

#include <hexpert/errors.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

namespace hexpert::nn {

namespace {

void require(bool ok, const char* op, const Shape& a, const Shape& b)
{
    if (!ok)
        throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                             to_string(b));
}

void require_rank(const Var& v, std::size_t rank, const char* op)
{
    if (v.value().rank() != rank)
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + to_string(v.shape()));
}

bool needs_grad(Var a)
{
    return a.tape().requires_grad(a);
}

bool needs_grad(Var a, Var b)
{
    return needs_grad(a) || needs_grad(b);
}

void same_tape(Var a, Var b)
{
    if (&a.tape() != &b.tape())
        throw ContractViolation("operands recorded on different tapes");
}

// out[n,m] += a[n,k] * b[k,m]
void gemm_nn(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t m)
{
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out + i * m;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0)
                continue;
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j)
                row[j] += av * brow[j];
        }
    }
}

// out[n,k] += g[n,m] * b[k,m]^T
void gemm_nt(const double* g, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t m)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        double* orow = out + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                acc += grow[j] * brow[j];
            orow[p] += acc;
        }
    }
}

// out[k,m] += a[n,k]^T * g[n,m]
void gemm_tn(const double* a, const double* g, double* out, std::size_t n, std::size_t k,
             std::size_t m)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0)
                continue;
            double* orow = out + p * m;
            for (std::size_t j = 0; j < m; ++j)
                orow[j] += av * grow[j];
        }
    }
}

template <class F, class DF>
Var unary(Var a, F f, DF df)
{
    const Tensor& x = a.value();
    const bool rg = needs_grad(a);
    Tensor y(x.shape());
    Tensor dydx;
    if (rg)
        dydx = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
        if (rg)
            dydx[i] = df(x[i], y[i]);
    }
    return a.tape().record(std::move(y), rg, [a, dydx = std::move(dydx)](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * dydx[i];
    });
}

} // namespace

Var matmul(Var a, Var b)
{
    same_tape(a, b);
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    require(b.shape()[0] == k, "matmul", a.shape(), b.shape());
    Tensor y({n, m});
    gemm_nn(a.value().data(), b.value().data(), y.data(), n, k, m);
    return a.tape().record(std::move(y), needs_grad(a, b), [a, b, n, k, m](Tape& t, const Tensor& g) {
        if (t.requires_grad(a))
            gemm_nt(g.data(), t.value(b).data(), t.grad(a).data(), n, k, m);
        if (t.requires_grad(b))
            gemm_tn(t.value(a).data(), g.data(), t.grad(b).data(), n, k, m);
    });
}

Var affine(Var x, Var weights, Var bias)
{
    same_tape(x, weights);
    same_tape(x, bias);
    require_rank(x, 2, "affine");
    require_rank(weights, 2, "affine");
    const std::size_t n = x.shape()[0], k = x.shape()[1], m = weights.shape()[1];
    require(weights.shape()[0] == k, "affine", x.shape(), weights.shape());
    require(bias.value().size() == m, "affine", weights.shape(), bias.shape());
    Tensor y({n, m});
    const double* bv = bias.value().data();
    for (std::size_t i = 0; i < n; ++i)
        std::copy(bv, bv + m, y.data() + i * m);
    gemm_nn(x.value().data(), weights.value().data(), y.data(), n, k, m);
    const bool rg = needs_grad(x) || needs_grad(weights) || needs_grad(bias);
    return x.tape().record(std::move(y), rg, [x, weights, bias, n, k, m](Tape& t, const Tensor& g) {
        if (t.requires_grad(x))
            gemm_nt(g.data(), t.value(weights).data(), t.grad(x).data(), n, k, m);
        if (t.requires_grad(weights))
            gemm_tn(t.value(x).data(), g.data(), t.grad(weights).data(), n, k, m);
        if (t.requires_grad(bias)) {
            Tensor& gb = t.grad(bias);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    gb[j] += g[i * m + j];
        }
    });
}

Var add_bias(Var a, Var bias)
{
    same_tape(a, bias);
    require_rank(a, 2, "add_bias");
    const std::size_t n = a.shape()[0], m = a.shape()[1];
    require(bias.value().size() == m, "add_bias", a.shape(), bias.shape());
    Tensor y = a.value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            y[i * m + j] += bias.value()[j];
    return a.tape().record(std::move(y), needs_grad(a, bias), [a, bias, n, m](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i];
        }
        if (t.requires_grad(bias)) {
            Tensor& gb = t.grad(bias);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    gb[j] += g[i * m + j];
        }
    });
}

Var add(Var a, Var b)
{
    same_tape(a, b);
    require(a.shape() == b.shape(), "add", a.shape(), b.shape());
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] += b.value()[i];
    return a.tape().record(std::move(y), needs_grad(a, b), [a, b](Tape& t, const Tensor& g) {
        for (Var v : {a, b}) {
            if (!t.requires_grad(v))
                continue;
            Tensor& gv = t.grad(v);
            for (std::size_t i = 0; i < g.size(); ++i)
                gv[i] += g[i];
        }
    });
}

Var sub(Var a, Var b)
{
    same_tape(a, b);
    require(a.shape() == b.shape(), "sub", a.shape(), b.shape());
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] -= b.value()[i];
    return a.tape().record(std::move(y), needs_grad(a, b), [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i];
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b)
{
    same_tape(a, b);
    require(a.shape() == b.shape(), "mul", a.shape(), b.shape());
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] *= b.value()[i];
    return a.tape().record(std::move(y), needs_grad(a, b), [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) {
            const Tensor& bv = t.value(b);
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(b)) {
            const Tensor& av = t.value(a);
            Tensor& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] += g[i] * av[i];
        }
    });
}

Var scale(Var a, double factor)
{
    Tensor y = a.value();
    for (auto& v : y.values())
        v *= factor;
    return a.tape().record(std::move(y), needs_grad(a), [a, factor](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * factor;
    });
}

Var add_scalar(Var a, double c)
{
    Tensor y = a.value();
    for (auto& v : y.values())
        v += c;
    return a.tape().record(std::move(y), needs_grad(a), [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i];
    });
}

Var neg(Var a)
{
    return scale(a, -1.0);
}

Var tanh(Var a)
{
    return unary(a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a)
{
    return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a)
{
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope)
{
    return unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                 [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var exp(Var a)
{
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a)
{
    for (double v : a.value().values())
        if (!(v > 0.0))
            throw DomainError("log of non-positive value " + std::to_string(v));
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a)
{
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softplus(Var a)
{
    return unary(
        a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var sum(Var a)
{
    double s = 0.0;
    for (double v : a.value().values())
        s += v;
    return a.tape().record(Tensor::scalar(s), needs_grad(a), [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (auto& v : ga.values())
            v += g[0];
    });
}

Var mean(Var a)
{
    const std::size_t n = a.value().size();
    if (n == 0)
        throw DimensionError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_rows(Var a)
{
    require_rank(a, 2, "sum_rows");
    const std::size_t n = a.shape()[0], m = a.shape()[1];
    Tensor y({n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            y[i] += a.value()[i * m + j];
    return a.tape().record(std::move(y), needs_grad(a), [a, n, m](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                ga[i * m + j] += g[i];
    });
}

Var log_softmax_rows(Var a)
{
    require_rank(a, 2, "log_softmax_rows");
    const std::size_t n = a.shape()[0], m = a.shape()[1];
    const Tensor& x = a.value();
    Tensor y({n, m});
    Tensor probs({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.data() + i * m;
        const double mx = *std::max_element(row, row + m);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            s += std::exp(row[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < m; ++j) {
            y[i * m + j] = row[j] - lse;
            probs[i * m + j] = std::exp(y[i * m + j]);
        }
    }
    return a.tape().record(std::move(y), needs_grad(a), [a, probs = std::move(probs), n, m](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < n; ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                gs += g[i * m + j];
            for (std::size_t j = 0; j < m; ++j)
                ga[i * m + j] += g[i * m + j] - probs[i * m + j] * gs;
        }
    });
}

Var softmax_rows(Var a)
{
    return exp(log_softmax_rows(a));
}

Var pick(Var a, std::span<const std::size_t> index)
{
    require_rank(a, 2, "pick");
    const std::size_t n = a.shape()[0], m = a.shape()[1];
    if (index.size() != n)
        throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " +
                             std::to_string(n) + " rows");
    Tensor y({n});
    std::vector<std::size_t> idx(index.begin(), index.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (idx[i] >= m)
            throw DimensionError("pick: index " + std::to_string(idx[i]) + " out of range");
        y[i] = a.value()[i * m + idx[i]];
    }
    return a.tape().record(std::move(y), needs_grad(a), [a, idx = std::move(idx), m](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < idx.size(); ++i)
            ga[i * m + idx[i]] += g[i];
    });
}

Var reshape(Var a, Shape shape)
{
    if (shape_size(shape) != a.value().size())
        throw DimensionError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
    return a.tape().record(a.value().reshaped(std::move(shape)), needs_grad(a), [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i];
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end)
{
    require_rank(a, 2, "slice_cols");
    const std::size_t n = a.shape()[0], m = a.shape()[1];
    if (begin >= end || end > m)
        throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") of " + std::to_string(m) + " columns");
    const std::size_t w = end - begin;
    Tensor y({n, w});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j)
            y[i * w + j] = a.value()[i * m + begin + j];
    return a.tape().record(std::move(y), needs_grad(a), [a, n, m, w, begin](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j)
                ga[i * m + begin + j] += g[i * w + j];
    });
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty())
        throw DimensionError("concat_cols: no inputs");
    const std::size_t n = parts[0].shape()[0];
    std::size_t total = 0;
    bool rg = false;
    for (const Var& p : parts) {
        require_rank(p, 2, "concat_cols");
        require(p.shape()[0] == n, "concat_cols", parts[0].shape(), p.shape());
        same_tape(parts[0], p);
        total += p.shape()[1];
        rg = rg || needs_grad(p);
    }
    Tensor y({n, total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        const std::size_t w = p.shape()[1];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j)
                y[i * total + off + j] = p.value()[i * w + j];
        off += w;
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts[0].tape().record(std::move(y), rg, [inputs, n, total](Tape& t, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : inputs) {
            const std::size_t w = t.value(p).shape()[1];
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad(p);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < w; ++j)
                        gp[i * w + j] += g[i * total + off + j];
            }
            off += w;
        }
    });
}

Var detach(Var a)
{
    return a.tape().constant(a.value());
}

Var huber(Var a, const Tensor& target, double delta)
{
    if (a.value().size() != target.size())
        throw DimensionError("huber: prediction " + to_string(a.shape()) + " vs target " +
                             to_string(target.shape()));
    if (!(delta > 0.0))
        throw DomainError("huber: delta must be positive");
    Tensor y(a.shape());
    Tensor err(a.shape());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = a.value()[i] - target[i];
        err[i] = e;
        const double ae = std::abs(e);
        y[i] = ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
    }
    return a.tape().record(std::move(y), needs_grad(a), [a, err = std::move(err), delta](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double e = err[i];
            const double d = std::abs(e) <= delta ? e : (e > 0.0 ? delta : -delta);
            ga[i] += g[i] * d;
        }
    });
}

Var conv2d(Var input, Var filters, Var bias, std::size_t stride)
{
    same_tape(input, filters);
    same_tape(input, bias);
    require_rank(input, 4, "conv2d");
    require_rank(filters, 4, "conv2d");
    const Shape& xs = input.shape();
    const Shape& fs = filters.shape();
    const std::size_t n = xs[0], h = xs[1], w = xs[2], cin = xs[3];
    const std::size_t kh = fs[0], kw = fs[1], cout = fs[3];
    require(fs[2] == cin, "conv2d", xs, fs);
    require(bias.value().size() == cout, "conv2d", fs, bias.shape());
    if (stride == 0 || h < kh || w < kw)
        throw DimensionError("conv2d: input " + to_string(xs) + " too small for filters " +
                             to_string(fs));
    const std::size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
    const std::size_t patch = kh * kw * cin;
    const std::size_t rows = n * oh * ow;

    // im2col: one row per output pixel, columns ordered (ky, kx, ci) to match
    // the filter layout flattened to [patch, cout].
    auto cols = std::make_shared<std::vector<double>>(rows * patch);
    const double* x = input.value().data();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double* dst = cols->data() + ((b * oh + oy) * ow + ox) * patch;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const double* src = x + ((b * h + oy * stride + ky) * w + ox * stride) * cin;
                    std::copy(src, src + kw * cin, dst + ky * kw * cin);
                }
            }

    Tensor y({n, oh, ow, cout});
    const double* bv = bias.value().data();
    for (std::size_t r = 0; r < rows; ++r)
        std::copy(bv, bv + cout, y.data() + r * cout);
    gemm_nn(cols->data(), filters.value().data(), y.data(), rows, patch, cout);

    const bool rg = needs_grad(input) || needs_grad(filters) || needs_grad(bias);
    return input.tape().record(
        std::move(y), rg,
        [input, filters, bias, cols, n, h, w, cin, kh, kw, oh, ow, cout, stride, patch, rows](Tape& t, const Tensor& g) {
            if (t.requires_grad(filters))
                gemm_tn(cols->data(), g.data(), t.grad(filters).data(), rows, patch, cout);
            if (t.requires_grad(bias)) {
                Tensor& gb = t.grad(bias);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cout; ++c)
                        gb[c] += g[r * cout + c];
            }
            if (t.requires_grad(input)) {
                std::vector<double> gcols(rows * patch, 0.0);
                gemm_nt(g.data(), t.value(filters).data(), gcols.data(), rows, patch, cout);
                Tensor& gx = t.grad(input);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t oy = 0; oy < oh; ++oy)
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const double* src = gcols.data() + ((b * oh + oy) * ow + ox) * patch;
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                double* dst = gx.data() + ((b * h + oy * stride + ky) * w + ox * stride) * cin;
                                const double* s = src + ky * kw * cin;
                                for (std::size_t q = 0; q < kw * cin; ++q)
                                    dst[q] += s[q];
                            }
                        }
            }
        });
}

Var resize_nearest(Var input, std::size_t out_h, std::size_t out_w)
{
    require_rank(input, 4, "resize_nearest");
    const Shape& xs = input.shape();
    const std::size_t n = xs[0], h = xs[1], w = xs[2], c = xs[3];
    if (out_h == 0 || out_w == 0)
        throw DimensionError("resize_nearest: empty output size");
    std::vector<std::size_t> src_y(out_h), src_x(out_w);
    for (std::size_t i = 0; i < out_h; ++i)
        src_y[i] = std::min(h - 1, i * h / out_h);
    for (std::size_t i = 0; i < out_w; ++i)
        src_x[i] = std::min(w - 1, i * w / out_w);
    Tensor y({n, out_h, out_w, c});
    const double* x = input.value().data();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < out_h; ++oy)
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const double* src = x + ((b * h + src_y[oy]) * w + src_x[ox]) * c;
                std::copy(src, src + c, y.data() + ((b * out_h + oy) * out_w + ox) * c);
            }
    return input.tape().record(std::move(y), needs_grad(input),
                               [input, src_y, src_x, n, h, w, c, out_h, out_w](Tape& t, const Tensor& g) {
                                   Tensor& gx = t.grad(input);
                                   for (std::size_t b = 0; b < n; ++b)
                                       for (std::size_t oy = 0; oy < out_h; ++oy)
                                           for (std::size_t ox = 0; ox < out_w; ++ox) {
                                               const double* src = g.data() + ((b * out_h + oy) * out_w + ox) * c;
                                               double* dst = gx.data() + ((b * h + src_y[oy]) * w + src_x[ox]) * c;
                                               for (std::size_t q = 0; q < c; ++q)
                                                   dst[q] += src[q];
                                           }
                               });
}

} // namespace hexpert::nn
