#include "fervit/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "fervit/errors.hpp"

namespace fervit::ad {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void require(bool cond, const std::string& msg) {
    if (!cond) raise(Errc::shape_mismatch, msg);
}

} // namespace

Builder::Node* Builder::make(Tensor value, bool needs_grad) {
    auto node = std::make_unique<Node>();
    node->value = std::move(value);
    node->needs_grad = needs_grad;
    Node* raw = node.get();
    nodes_.push_back(std::move(node));
    return raw;
}

Tensor& Builder::grad_of(Node* n) {
    if (n->grad.empty()) n->grad = Tensor(n->value.shape());
    return n->grad;
}

Val Builder::constant(Tensor t) { return Val{make(std::move(t), false)}; }

Val Builder::param(Parameter& p) {
    Node* n = make(p.value, p.trainable);
    if (p.trainable) n->param = &p;
    return Val{n};
}

Val Builder::add(Val a, Val b) {
    require(a.node->value.same_shape(b.node->value),
            "add: " + a.value().shape_str() + " vs " + b.value().shape_str());
    Tensor out = a.node->value;
    const Tensor& bv = b.node->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];

    Node* n = make(std::move(out), a.node->needs_grad || b.node->needs_grad);
    Node *an = a.node, *bn = b.node;
    n->backprop = [this, n, an, bn] {
        if (an->needs_grad) grad_of(an) += n->grad;
        if (bn->needs_grad) grad_of(bn) += n->grad;
    };
    return Val{n};
}

Val Builder::add_bias(Val x, Val b) {
    const Tensor& xv = x.node->value;
    const Tensor& bv = b.node->value;
    require(bv.rank() == 1 && xv.rank() >= 1 && xv.shape().back() == bv.dim(0),
            "add_bias: " + xv.shape_str() + " + " + bv.shape_str());
    const std::size_t d = bv.dim(0);
    const std::size_t rows = xv.size() / d;

    Tensor out = xv;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] += bv[j];

    Node* n = make(std::move(out), x.node->needs_grad || b.node->needs_grad);
    Node *xn = x.node, *bn = b.node;
    n->backprop = [this, n, xn, bn, rows, d] {
        if (xn->needs_grad) grad_of(xn) += n->grad;
        if (bn->needs_grad) {
            Tensor& bg = grad_of(bn);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < d; ++j) bg[j] += n->grad[r * d + j];
        }
    };
    return Val{n};
}

Val Builder::mul(Val a, Val b) {
    require(a.node->value.same_shape(b.node->value),
            "mul: " + a.value().shape_str() + " vs " + b.value().shape_str());
    Tensor out = a.node->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.node->value[i];

    Node* n = make(std::move(out), a.node->needs_grad || b.node->needs_grad);
    Node *an = a.node, *bn = b.node;
    n->backprop = [this, n, an, bn] {
        if (an->needs_grad) {
            Tensor& ag = grad_of(an);
            for (std::size_t i = 0; i < ag.size(); ++i) ag[i] += n->grad[i] * bn->value[i];
        }
        if (bn->needs_grad) {
            Tensor& bg = grad_of(bn);
            for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += n->grad[i] * an->value[i];
        }
    };
    return Val{n};
}

Val Builder::scale(Val x, double c) {
    Tensor out = x.node->value;
    out *= c;
    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, c] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += c * n->grad[i];
    };
    return Val{n};
}

Val Builder::gelu(Val x) {
    const Tensor& xv = x.node->value;
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i)
        out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t i = 0; i < xg.size(); ++i) {
            const double v = xn->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            xg[i] += n->grad[i] * (cdf + v * pdf);
        }
    };
    return Val{n};
}

Val Builder::dropout(Val x, double p, Rng& rng, bool training) {
    if (!training || p <= 0.0) return x;
    require(p < 1.0, "dropout probability must be < 1");
    const Tensor& xv = x.node->value;
    // Inverted dropout: surviving activations scale by 1/(1-p).
    auto mask = std::make_shared<Tensor>(xv.shape());
    const double keep = 1.0 - p;
    for (std::size_t i = 0; i < mask->size(); ++i)
        (*mask)[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;

    Tensor out(xv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * (*mask)[i];

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, mask] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += n->grad[i] * (*mask)[i];
    };
    return Val{n};
}

Val Builder::matmul(Val a, Val b) {
    const Tensor& av = a.node->value;
    const Tensor& bv = b.node->value;
    require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
            "matmul: " + av.shape_str() + " x " + bv.shape_str());
    Node* n = make(fervit::matmul(av, bv), a.node->needs_grad || b.node->needs_grad);
    Node *an = a.node, *bn = b.node;
    n->backprop = [this, n, an, bn] {
        const std::size_t m = an->value.dim(0), k = an->value.dim(1), c = bn->value.dim(1);
        if (an->needs_grad) {
            Tensor& ag = grad_of(an); // dA = dY * B^T
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    const double g = n->grad[i * c + j];
                    if (g == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p)
                        ag[i * k + p] += g * bn->value[p * c + j];
                }
        }
        if (bn->needs_grad) {
            Tensor& bg = grad_of(bn); // dB = A^T * dY
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av_ = an->value[i * k + p];
                    if (av_ == 0.0) continue;
                    for (std::size_t j = 0; j < c; ++j)
                        bg[p * c + j] += av_ * n->grad[i * c + j];
                }
        }
    };
    return Val{n};
}

Val Builder::bmm(Val a, Val b) {
    const Tensor& av = a.node->value;
    const Tensor& bv = b.node->value;
    require(av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0) &&
                av.dim(2) == bv.dim(1),
            "bmm: " + av.shape_str() + " x " + bv.shape_str());
    const std::size_t B = av.dim(0), m = av.dim(1), k = av.dim(2), c = bv.dim(2);

    Tensor out({B, m, c});
    for (std::size_t bi = 0; bi < B; ++bi) {
        const double* A = av.data() + bi * m * k;
        const double* Bm = bv.data() + bi * k * c;
        double* C = out.data() + bi * m * c;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                const double x = A[i * k + p];
                if (x == 0.0) continue;
                for (std::size_t j = 0; j < c; ++j) C[i * c + j] += x * Bm[p * c + j];
            }
    }

    Node* n = make(std::move(out), a.node->needs_grad || b.node->needs_grad);
    Node *an = a.node, *bn = b.node;
    n->backprop = [this, n, an, bn, B, m, k, c] {
        for (std::size_t bi = 0; bi < B; ++bi) {
            const double* G = n->grad.data() + bi * m * c;
            const double* A = an->value.data() + bi * m * k;
            const double* Bm = bn->value.data() + bi * k * c;
            if (an->needs_grad) {
                double* ag = grad_of(an).data() + bi * m * k;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        const double g = G[i * c + j];
                        if (g == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p) ag[i * k + p] += g * Bm[p * c + j];
                    }
            }
            if (bn->needs_grad) {
                double* bg = grad_of(bn).data() + bi * k * c;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double x = A[i * k + p];
                        if (x == 0.0) continue;
                        for (std::size_t j = 0; j < c; ++j) bg[p * c + j] += x * G[i * c + j];
                    }
            }
        }
    };
    return Val{n};
}

Val Builder::transpose_last2(Val x) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 2 || xv.rank() == 3, "transpose_last2: rank 2 or 3 required");
    const std::size_t B = xv.rank() == 3 ? xv.dim(0) : 1;
    const std::size_t m = xv.dim(xv.rank() - 2), c = xv.dim(xv.rank() - 1);

    std::vector<std::size_t> out_shape = xv.shape();
    std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
    Tensor out(out_shape);
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out[bi * m * c + j * m + i] = xv[bi * m * c + i * c + j];

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, B, m, c] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    xg[bi * m * c + i * c + j] += n->grad[bi * m * c + j * m + i];
    };
    return Val{n};
}

Val Builder::reshape(Val x, std::vector<std::size_t> shape) {
    require(shape_numel(shape) == x.node->value.size(),
            "reshape: element count mismatch " + x.value().shape_str());
    Tensor out(std::move(shape));
    std::copy(x.node->value.data(), x.node->value.data() + x.node->value.size(), out.data());

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += n->grad[i];
    };
    return Val{n};
}

Val Builder::expand_batch(Val x, std::size_t batch) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 2, "expand_batch expects rank-2 input");
    const std::size_t m = xv.dim(0), c = xv.dim(1);
    Tensor out({batch, m, c});
    for (std::size_t b = 0; b < batch; ++b)
        std::copy(xv.data(), xv.data() + m * c, out.data() + b * m * c);

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, batch, m, c] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < m * c; ++i) xg[i] += n->grad[b * m * c + i];
    };
    return Val{n};
}

Val Builder::split_heads(Val x, std::size_t heads) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 3 && xv.dim(2) % heads == 0,
            "split_heads: " + xv.shape_str() + " with heads=" + std::to_string(heads));
    const std::size_t B = xv.dim(0), N = xv.dim(1), hd = xv.dim(2) / heads;

    Tensor out({B * heads, N, hd});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < N; ++t)
            for (std::size_t h = 0; h < heads; ++h)
                for (std::size_t d = 0; d < hd; ++d)
                    out[((b * heads + h) * N + t) * hd + d] =
                        xv[(b * N + t) * heads * hd + h * hd + d];

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, B, N, heads, hd] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < N; ++t)
                for (std::size_t h = 0; h < heads; ++h)
                    for (std::size_t d = 0; d < hd; ++d)
                        xg[(b * N + t) * heads * hd + h * hd + d] +=
                            n->grad[((b * heads + h) * N + t) * hd + d];
    };
    return Val{n};
}

Val Builder::merge_heads(Val x, std::size_t heads) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 3 && xv.dim(0) % heads == 0,
            "merge_heads: " + xv.shape_str() + " with heads=" + std::to_string(heads));
    const std::size_t B = xv.dim(0) / heads, N = xv.dim(1), hd = xv.dim(2);

    Tensor out({B, N, heads * hd});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < N; ++t)
            for (std::size_t h = 0; h < heads; ++h)
                for (std::size_t d = 0; d < hd; ++d)
                    out[(b * N + t) * heads * hd + h * hd + d] =
                        xv[((b * heads + h) * N + t) * hd + d];

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, B, N, heads, hd] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < N; ++t)
                for (std::size_t h = 0; h < heads; ++h)
                    for (std::size_t d = 0; d < hd; ++d)
                        xg[((b * heads + h) * N + t) * hd + d] +=
                            n->grad[(b * N + t) * heads * hd + h * hd + d];
    };
    return Val{n};
}

Val Builder::select_mid(Val x, std::size_t index) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 3 && index < xv.dim(1),
            "select_mid: " + xv.shape_str() + " index " + std::to_string(index));
    const std::size_t B = xv.dim(0), G = xv.dim(1), D = xv.dim(2);

    Tensor out({B, D});
    for (std::size_t b = 0; b < B; ++b)
        std::copy(xv.data() + (b * G + index) * D, xv.data() + (b * G + index) * D + D,
                  out.data() + b * D);

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, B, G, D, index] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t d = 0; d < D; ++d)
                xg[(b * G + index) * D + d] += n->grad[b * D + d];
    };
    return Val{n};
}

Val Builder::concat_lastdim(const std::vector<Val>& parts) {
    require(!parts.empty(), "concat_lastdim: no parts");
    const std::size_t B = parts[0].node->value.dim(0);
    std::size_t total = 0;
    bool needs = false;
    for (const Val& p : parts) {
        require(p.node->value.rank() == 2 && p.node->value.dim(0) == B,
                "concat_lastdim: all parts must be (B, f_i)");
        total += p.node->value.dim(1);
        needs = needs || p.node->needs_grad;
    }

    Tensor out({B, total});
    std::size_t off = 0;
    for (const Val& p : parts) {
        const std::size_t f = p.node->value.dim(1);
        for (std::size_t b = 0; b < B; ++b)
            std::copy(p.node->value.data() + b * f, p.node->value.data() + b * f + f,
                      out.data() + b * total + off);
        off += f;
    }

    Node* n = make(std::move(out), needs);
    std::vector<Node*> part_nodes;
    part_nodes.reserve(parts.size());
    for (const Val& p : parts) part_nodes.push_back(p.node);
    n->backprop = [this, n, part_nodes, B, total] {
        std::size_t off = 0;
        for (Node* pn : part_nodes) {
            const std::size_t f = pn->value.dim(1);
            if (pn->needs_grad) {
                Tensor& pg = grad_of(pn);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t j = 0; j < f; ++j)
                        pg[b * f + j] += n->grad[b * total + off + j];
            }
            off += f;
        }
    };
    return Val{n};
}

Val Builder::slice_lastdim(Val x, std::size_t start, std::size_t len) {
    const Tensor& xv = x.node->value;
    require(xv.rank() == 2 && start + len <= xv.dim(1),
            "slice_lastdim: " + xv.shape_str() + " [" + std::to_string(start) + ", +" +
                std::to_string(len) + ")");
    const std::size_t B = xv.dim(0), F = xv.dim(1);

    Tensor out({B, len});
    for (std::size_t b = 0; b < B; ++b)
        std::copy(xv.data() + b * F + start, xv.data() + b * F + start + len,
                  out.data() + b * len);

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, B, F, start, len] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < len; ++j)
                xg[b * F + start + j] += n->grad[b * len + j];
    };
    return Val{n};
}

Val Builder::softmax_lastdim(Val x) {
    const Tensor& xv = x.node->value;
    require(xv.rank() >= 1, "softmax_lastdim: empty tensor");
    const std::size_t d = xv.shape().back();
    const std::size_t rows = xv.size() / d;

    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * d;
        double* o = out.data() + r * d;
        double mx = in[0];
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < d; ++j) o[j] /= sum;
    }

    Node* n = make(std::move(out), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn, rows, d] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = n->value.data() + r * d;
            const double* dy = n->grad.data() + r * d;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += dy[j] * y[j];
            for (std::size_t j = 0; j < d; ++j) xg[r * d + j] += y[j] * (dy[j] - dot);
        }
    };
    return Val{n};
}

Val Builder::layernorm(Val x, Val gamma, Val beta, double eps) {
    const Tensor& xv = x.node->value;
    const std::size_t d = xv.shape().back();
    require(gamma.node->value.rank() == 1 && gamma.node->value.dim(0) == d &&
                beta.node->value.rank() == 1 && beta.node->value.dim(0) == d,
            "layernorm: gamma/beta must be (" + std::to_string(d) + ")");
    const std::size_t rows = xv.size() / d;

    // Cache normalized activations and 1/sigma per row for the backward pass.
    auto xhat = std::make_shared<Tensor>(xv.shape());
    auto inv_sigma = std::make_shared<std::vector<double>>(rows);

    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += in[j];
        mean /= double(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (in[j] - mean) * (in[j] - mean);
        var /= double(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[r] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (in[j] - mean) * inv;
            (*xhat)[r * d + j] = xh;
            out[r * d + j] = gamma.node->value[j] * xh + beta.node->value[j];
        }
    }

    Node* n = make(std::move(out),
                   x.node->needs_grad || gamma.node->needs_grad || beta.node->needs_grad);
    Node *xn = x.node, *gn = gamma.node, *bn = beta.node;
    n->backprop = [this, n, xn, gn, bn, xhat, inv_sigma, rows, d] {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* dy = n->grad.data() + r * d;
            const double* xh = xhat->data() + r * d;
            if (gn->needs_grad) {
                Tensor& gg = grad_of(gn);
                for (std::size_t j = 0; j < d; ++j) gg[j] += dy[j] * xh[j];
            }
            if (bn->needs_grad) {
                Tensor& bg = grad_of(bn);
                for (std::size_t j = 0; j < d; ++j) bg[j] += dy[j];
            }
            if (xn->needs_grad) {
                Tensor& xg = grad_of(xn);
                double mean_g = 0.0, mean_gx = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double g = dy[j] * gn->value[j];
                    mean_g += g;
                    mean_gx += g * xh[j];
                }
                mean_g /= double(d);
                mean_gx /= double(d);
                const double inv = (*inv_sigma)[r];
                for (std::size_t j = 0; j < d; ++j) {
                    const double g = dy[j] * gn->value[j];
                    xg[r * d + j] += inv * (g - mean_g - xh[j] * mean_gx);
                }
            }
        }
    };
    return Val{n};
}

Val Builder::sum_all(Val x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.node->value.size(); ++i) s += x.node->value[i];
    Node* n = make(Tensor({1}, std::vector<double>{s}), x.node->needs_grad);
    Node* xn = x.node;
    n->backprop = [this, n, xn] {
        if (!xn->needs_grad) return;
        Tensor& xg = grad_of(xn);
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += n->grad[0];
    };
    return Val{n};
}

Val Builder::cross_entropy(Val logits, const std::vector<int>& targets) {
    const Tensor& lv = logits.node->value;
    require(lv.rank() == 2, "cross_entropy expects (B,K) logits");
    const std::size_t B = lv.dim(0), K = lv.dim(1);
    if (targets.size() != B)
        raise(Errc::length_mismatch, "cross_entropy: " + std::to_string(targets.size()) +
                                         " targets for batch " + std::to_string(B));
    for (int t : targets)
        if (t < 0 || t >= static_cast<int>(K))
            raise(Errc::invalid_target, "target " + std::to_string(t) + " outside 0.." +
                                            std::to_string(K - 1));

    // Stable log-softmax: subtract the row max before exponentiating.
    auto probs = std::make_shared<Tensor>(lv.shape());
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = lv.data() + b * K;
        double mx = row[0];
        for (std::size_t j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < K; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - row[targets[b]];
        for (std::size_t j = 0; j < K; ++j) (*probs)[b * K + j] = std::exp(row[j] - lse);
    }
    loss /= double(B);

    Node* n = make(Tensor({1}, std::vector<double>{loss}), logits.node->needs_grad);
    Node* ln = logits.node;
    auto tgt = std::make_shared<std::vector<int>>(targets);
    n->backprop = [this, n, ln, probs, tgt, B, K] {
        if (!ln->needs_grad) return;
        Tensor& lg = grad_of(ln);
        const double g = n->grad[0] / double(B);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < K; ++j) lg[b * K + j] += g * (*probs)[b * K + j];
            lg[b * K + std::size_t((*tgt)[b])] -= g;
        }
    };
    return Val{n};
}

void Builder::backward(Val loss) {
    require(loss.node->value.size() == 1, "backward requires a scalar loss");
    grad_of(loss.node).fill(1.0);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node* n = it->get();
        if (n->needs_grad && n->backprop && !n->grad.empty()) n->backprop();
    }
    for (const auto& node : nodes_)
        if (node->param && !node->grad.empty()) node->param->grad += node->grad;
}

} // namespace fervit::ad
