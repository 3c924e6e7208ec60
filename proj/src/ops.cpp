#include "wavlink/ops.hpp"

#include "wavlink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wavlink::ops {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

TensorPtr new_node(std::vector<int> shape, std::vector<double> data,
                   std::vector<TensorPtr> parents) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(data);
    if (grad_enabled()) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) {
                t->requires_grad = true;
                break;
            }
        }
        if (t->requires_grad) t->parents = std::move(parents);
    }
    return t;
}

void require_2d(const TensorPtr& t, const char* op) {
    if (t->shape.size() != 2) {
        throw ValidationError(std::string(op) + ": expected 2-D tensor, got " + t->shape_str());
    }
}

} // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a->shape[0], k = a->shape[1];
    const int k2 = b->shape[0], n = b->shape[1];
    if (k != k2) {
        throw ValidationError("matmul: inner dimensions do not match: " +
                              a->shape_str() + " vs " + b->shape_str());
    }
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const double* ad = a->data.data();
    const double* bd = b->data.data();
    for (int i = 0; i < m; ++i) {
        double* orow = out.data() + static_cast<size_t>(i) * n;
        const double* arow = ad + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = bd + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    auto t = new_node({m, n}, std::move(out), {a, b});
    if (t->requires_grad) {
        t->backward_fn = [a, b, m, k, n](Tensor& self) {
            const double* g = self.grad.data();
            if (a->requires_grad) {
                double* da = a->grad.data();
                const double* bd = b->data.data();
                for (int i = 0; i < m; ++i) {
                    const double* grow = g + static_cast<size_t>(i) * n;
                    for (int kk = 0; kk < k; ++kk) {
                        const double* brow = bd + static_cast<size_t>(kk) * n;
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j) {
                            acc += grow[j] * brow[j];
                        }
                        da[static_cast<size_t>(i) * k + kk] += acc;
                    }
                }
            }
            if (b->requires_grad) {
                double* db = b->grad.data();
                const double* ad = a->data.data();
                for (int i = 0; i < m; ++i) {
                    const double* grow = g + static_cast<size_t>(i) * n;
                    const double* arow = ad + static_cast<size_t>(i) * k;
                    for (int kk = 0; kk < k; ++kk) {
                        const double av = arow[kk];
                        double* dbrow = db + static_cast<size_t>(kk) * n;
                        for (int j = 0; j < n; ++j) {
                            dbrow[j] += av * grow[j];
                        }
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr transpose(const TensorPtr& a) {
    require_2d(a, "transpose");
    const int m = a->shape[0], n = a->shape[1];
    std::vector<double> out(a->data.size());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out[static_cast<size_t>(j) * m + i] = a->data[static_cast<size_t>(i) * n + j];
        }
    }
    auto t = new_node({n, m}, std::move(out), {a});
    if (t->requires_grad) {
        t->backward_fn = [a, m, n](Tensor& self) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    a->grad[static_cast<size_t>(i) * n + j] +=
                        self.grad[static_cast<size_t>(j) * m + i];
                }
            }
        };
    }
    return t;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    const bool same = a->shape == b->shape;
    const bool row_bcast = !same && a->shape.size() == 2 &&
                           b->numel() == static_cast<size_t>(a->shape[1]);
    if (!same && !row_bcast) {
        throw ValidationError("add: incompatible shapes " + a->shape_str() +
                              " vs " + b->shape_str());
    }
    std::vector<double> out(a->data.size());
    if (same) {
        for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    } else {
        const int m = a->shape[0], n = a->shape[1];
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                out[static_cast<size_t>(i) * n + j] =
                    a->data[static_cast<size_t>(i) * n + j] + b->data[j];
            }
        }
    }
    auto t = new_node(a->shape, std::move(out), {a, b});
    if (t->requires_grad) {
        t->backward_fn = [a, b, same](Tensor& self) {
            if (a->requires_grad) {
                for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
            }
            if (b->requires_grad) {
                if (same) {
                    for (size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
                } else {
                    const int m = a->shape[0], n = a->shape[1];
                    for (int i = 0; i < m; ++i) {
                        for (int j = 0; j < n; ++j) {
                            b->grad[j] += self.grad[static_cast<size_t>(i) * n + j];
                        }
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw ValidationError("mul: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
    }
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    auto t = new_node(a->shape, std::move(out), {a, b});
    if (t->requires_grad) {
        t->backward_fn = [a, b](Tensor& self) {
            if (a->requires_grad) {
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    a->grad[i] += self.grad[i] * b->data[i];
                }
            }
            if (b->requires_grad) {
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    b->grad[i] += self.grad[i] * a->data[i];
                }
            }
        };
    }
    return t;
}

TensorPtr scale(const TensorPtr& a, double c) {
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
    auto t = new_node(a->shape, std::move(out), {a});
    if (t->requires_grad) {
        t->backward_fn = [a, c](Tensor& self) {
            for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * c;
        };
    }
    return t;
}

TensorPtr scalar_affine(const TensorPtr& a, const TensorPtr& s, const TensorPtr& b) {
    if (s->numel() != 1 || (b && b->numel() != 1)) {
        throw ValidationError("scalar_affine: scale/bias must be scalar tensors");
    }
    const double sv = s->data[0];
    const double bv = b ? b->data[0] : 0.0;
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = sv * a->data[i] + bv;
    std::vector<TensorPtr> parents = {a, s};
    if (b) parents.push_back(b);
    auto t = new_node(a->shape, std::move(out), parents);
    if (t->requires_grad) {
        t->backward_fn = [a, s, b, sv](Tensor& self) {
            if (a->requires_grad) {
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    a->grad[i] += self.grad[i] * sv;
                }
            }
            if (s->requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < self.grad.size(); ++i) {
                    acc += self.grad[i] * a->data[i];
                }
                s->grad[0] += acc;
            }
            if (b && b->requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i];
                b->grad[0] += acc;
            }
        };
    }
    return t;
}

TensorPtr exp_elem(const TensorPtr& a) {
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a->data[i]);
    auto t = new_node(a->shape, std::move(out), {a});
    if (t->requires_grad) {
        t->backward_fn = [a](Tensor& self) {
            for (size_t i = 0; i < self.grad.size(); ++i) {
                a->grad[i] += self.grad[i] * self.data[i];
            }
        };
    }
    return t;
}

TensorPtr gelu(const TensorPtr& a) {
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = a->data[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    auto t = new_node(a->shape, std::move(out), {a});
    if (t->requires_grad) {
        t->backward_fn = [a](Tensor& self) {
            for (size_t i = 0; i < self.grad.size(); ++i) {
                const double x = a->data[i];
                const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                a->grad[i] += self.grad[i] * (cdf + x * pdf);
            }
        };
    }
    return t;
}

TensorPtr softplus(const TensorPtr& a) {
    std::vector<double> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = a->data[i];
        out[i] = (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
    }
    auto t = new_node(a->shape, std::move(out), {a});
    if (t->requires_grad) {
        t->backward_fn = [a](Tensor& self) {
            for (size_t i = 0; i < self.grad.size(); ++i) {
                const double x = a->data[i];
                const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                            : std::exp(x) / (1.0 + std::exp(x));
                a->grad[i] += self.grad[i] * sig;
            }
        };
    }
    return t;
}

TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gamma,
                    const TensorPtr& beta, double eps) {
    if (x->shape.empty()) throw ValidationError("layernorm: scalar input");
    if (eps <= 0.0) throw ValidationError("layernorm: eps must be > 0");
    const int d = x->shape.back();
    if (gamma->numel() != static_cast<size_t>(d) || beta->numel() != static_cast<size_t>(d)) {
        throw ValidationError("layernorm: gamma/beta length does not match last extent " +
                              std::to_string(d) + " of " + x->shape_str());
    }
    const size_t rows = x->numel() / static_cast<size_t>(d);
    std::vector<double> out(x->data.size());
    std::vector<double> xhat(x->data.size());
    std::vector<double> inv_sigma(rows);
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x->data.data() + r * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += xr[j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xr[j] - mu;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[r] = is;
        for (int j = 0; j < d; ++j) {
            const double xh = (xr[j] - mu) * is;
            xhat[r * d + j] = xh;
            out[r * d + j] = gamma->data[j] * xh + beta->data[j];
        }
    }
    auto t = new_node(x->shape, std::move(out), {x, gamma, beta});
    if (t->requires_grad) {
        t->backward_fn = [x, gamma, beta, d, rows,
                          xhat = std::move(xhat),
                          inv_sigma = std::move(inv_sigma)](Tensor& self) {
            for (size_t r = 0; r < rows; ++r) {
                const double* g = self.grad.data() + r * d;
                const double* xh = xhat.data() + r * d;
                if (beta->requires_grad) {
                    for (int j = 0; j < d; ++j) beta->grad[j] += g[j];
                }
                if (gamma->requires_grad) {
                    for (int j = 0; j < d; ++j) gamma->grad[j] += g[j] * xh[j];
                }
                if (x->requires_grad) {
                    double m1 = 0.0, m2 = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double h = g[j] * gamma->data[j];
                        m1 += h;
                        m2 += h * xh[j];
                    }
                    m1 /= d;
                    m2 /= d;
                    for (int j = 0; j < d; ++j) {
                        const double h = g[j] * gamma->data[j];
                        x->grad[r * d + j] += (h - m1 - xh[j] * m2) * inv_sigma[r];
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr softmax_rows(const TensorPtr& x, const TensorPtr& mask) {
    require_2d(x, "softmax_rows");
    if (mask && mask->shape != x->shape) {
        throw ValidationError("softmax_rows: mask shape " + mask->shape_str() +
                              " does not match input " + x->shape_str());
    }
    const int m = x->shape[0], n = x->shape[1];
    std::vector<double> out(x->data.size());
    for (int i = 0; i < m; ++i) {
        const double* xr = x->data.data() + static_cast<size_t>(i) * n;
        const double* mr = mask ? mask->data.data() + static_cast<size_t>(i) * n : nullptr;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            const double z = xr[j] + (mr ? mr[j] : 0.0);
            if (z > mx) mx = z;
        }
        double denom = 0.0;
        double* orow = out.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double z = xr[j] + (mr ? mr[j] : 0.0);
            orow[j] = std::exp(z - mx);
            denom += orow[j];
        }
        for (int j = 0; j < n; ++j) orow[j] /= denom;
    }
    auto t = new_node(x->shape, std::move(out), {x});
    if (t->requires_grad) {
        t->backward_fn = [x, m, n](Tensor& self) {
            for (int i = 0; i < m; ++i) {
                const double* s = self.data.data() + static_cast<size_t>(i) * n;
                const double* g = self.grad.data() + static_cast<size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += g[j] * s[j];
                for (int j = 0; j < n; ++j) {
                    x->grad[static_cast<size_t>(i) * n + j] += (g[j] - dot) * s[j];
                }
            }
        };
    }
    return t;
}

TensorPtr softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& targets) {
    require_2d(logits, "softmax_cross_entropy");
    const int b = logits->shape[0], c = logits->shape[1];
    if (targets.size() != static_cast<size_t>(b)) {
        throw ValidationError("softmax_cross_entropy: expected " + std::to_string(b) +
                              " targets, got " + std::to_string(targets.size()));
    }
    for (int t : targets) {
        if (t < 0 || t >= c) {
            throw ValidationError("softmax_cross_entropy: target index " + std::to_string(t) +
                                  " out of range [0, " + std::to_string(c) + ")");
        }
    }
    std::vector<double> probs(logits->data.size());
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        const double* z = logits->data.data() + static_cast<size_t>(i) * c;
        double mx = z[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, z[j]);
        double denom = 0.0;
        double* p = probs.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) {
            p[j] = std::exp(z[j] - mx);
            denom += p[j];
        }
        for (int j = 0; j < c; ++j) p[j] /= denom;
        loss += std::log(denom) - (z[targets[i]] - mx);
    }
    loss /= b;
    auto t = new_node({1}, {loss}, {logits});
    if (t->requires_grad) {
        t->backward_fn = [logits, targets, b, c, probs = std::move(probs)](Tensor& self) {
            const double g = self.grad[0] / b;
            for (int i = 0; i < b; ++i) {
                for (int j = 0; j < c; ++j) {
                    const double onehot = (j == targets[i]) ? 1.0 : 0.0;
                    logits->grad[static_cast<size_t>(i) * c + j] +=
                        g * (probs[static_cast<size_t>(i) * c + j] - onehot);
                }
            }
        };
    }
    return t;
}

TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids) {
    require_2d(table, "embedding_lookup");
    const int v = table->shape[0], d = table->shape[1];
    if (ids.empty()) throw ValidationError("embedding_lookup: empty id list");
    for (int id : ids) {
        if (id < 0 || id >= v) {
            throw ValidationError("embedding_lookup: token id " + std::to_string(id) +
                                  " out of range [0, " + std::to_string(v) + ")");
        }
    }
    const int l = static_cast<int>(ids.size());
    std::vector<double> out(static_cast<size_t>(l) * d);
    for (int i = 0; i < l; ++i) {
        const double* src = table->data.data() + static_cast<size_t>(ids[i]) * d;
        std::copy(src, src + d, out.data() + static_cast<size_t>(i) * d);
    }
    auto t = new_node({l, d}, std::move(out), {table});
    if (t->requires_grad) {
        t->backward_fn = [table, ids, d](Tensor& self) {
            for (size_t i = 0; i < ids.size(); ++i) {
                double* dst = table->grad.data() + static_cast<size_t>(ids[i]) * d;
                const double* g = self.grad.data() + i * d;
                for (int j = 0; j < d; ++j) dst[j] += g[j];
            }
        };
    }
    return t;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ValidationError("concat_rows: empty input");
    const int n = parts[0]->cols();
    int total = 0;
    for (const auto& p : parts) {
        require_2d(p, "concat_rows");
        if (p->shape[1] != n) {
            throw ValidationError("concat_rows: column mismatch " + parts[0]->shape_str() +
                                  " vs " + p->shape_str());
        }
        total += p->shape[0];
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(total) * n);
    for (const auto& p : parts) {
        out.insert(out.end(), p->data.begin(), p->data.end());
    }
    auto t = new_node({total, n}, std::move(out), parts);
    if (t->requires_grad) {
        t->backward_fn = [parts](Tensor& self) {
            size_t off = 0;
            for (const auto& p : parts) {
                if (p->requires_grad) {
                    for (size_t i = 0; i < p->data.size(); ++i) {
                        p->grad[i] += self.grad[off + i];
                    }
                }
                off += p->data.size();
            }
        };
    }
    return t;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ValidationError("concat_cols: empty input");
    const int m = parts[0]->rows();
    int total = 0;
    for (const auto& p : parts) {
        require_2d(p, "concat_cols");
        if (p->shape[0] != m) {
            throw ValidationError("concat_cols: row mismatch " + parts[0]->shape_str() +
                                  " vs " + p->shape_str());
        }
        total += p->shape[1];
    }
    std::vector<double> out(static_cast<size_t>(m) * total);
    int col0 = 0;
    for (const auto& p : parts) {
        const int pn = p->shape[1];
        for (int i = 0; i < m; ++i) {
            std::copy(p->data.begin() + static_cast<size_t>(i) * pn,
                      p->data.begin() + static_cast<size_t>(i + 1) * pn,
                      out.begin() + static_cast<size_t>(i) * total + col0);
        }
        col0 += pn;
    }
    auto t = new_node({m, total}, std::move(out), parts);
    if (t->requires_grad) {
        t->backward_fn = [parts, m, total](Tensor& self) {
            int col0 = 0;
            for (const auto& p : parts) {
                const int pn = p->shape[1];
                if (p->requires_grad) {
                    for (int i = 0; i < m; ++i) {
                        for (int j = 0; j < pn; ++j) {
                            p->grad[static_cast<size_t>(i) * pn + j] +=
                                self.grad[static_cast<size_t>(i) * total + col0 + j];
                        }
                    }
                }
                col0 += pn;
            }
        };
    }
    return t;
}

TensorPtr slice_cols(const TensorPtr& x, int start, int len) {
    require_2d(x, "slice_cols");
    const int m = x->shape[0], n = x->shape[1];
    if (start < 0 || len <= 0 || start + len > n) {
        throw ValidationError("slice_cols: range [" + std::to_string(start) + ", " +
                              std::to_string(start + len) + ") outside " + x->shape_str());
    }
    std::vector<double> out(static_cast<size_t>(m) * len);
    for (int i = 0; i < m; ++i) {
        std::copy(x->data.begin() + static_cast<size_t>(i) * n + start,
                  x->data.begin() + static_cast<size_t>(i) * n + start + len,
                  out.begin() + static_cast<size_t>(i) * len);
    }
    auto t = new_node({m, len}, std::move(out), {x});
    if (t->requires_grad) {
        t->backward_fn = [x, start, len, m, n](Tensor& self) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < len; ++j) {
                    x->grad[static_cast<size_t>(i) * n + start + j] +=
                        self.grad[static_cast<size_t>(i) * len + j];
                }
            }
        };
    }
    return t;
}

TensorPtr select_row(const TensorPtr& x, int r) {
    require_2d(x, "select_row");
    const int m = x->shape[0], n = x->shape[1];
    if (r < 0 || r >= m) {
        throw ValidationError("select_row: row " + std::to_string(r) + " outside " + x->shape_str());
    }
    std::vector<double> out(x->data.begin() + static_cast<size_t>(r) * n,
                            x->data.begin() + static_cast<size_t>(r + 1) * n);
    auto t = new_node({1, n}, std::move(out), {x});
    if (t->requires_grad) {
        t->backward_fn = [x, r, n](Tensor& self) {
            for (int j = 0; j < n; ++j) {
                x->grad[static_cast<size_t>(r) * n + j] += self.grad[j];
            }
        };
    }
    return t;
}

TensorPtr l2_normalize_rows(const TensorPtr& x) {
    require_2d(x, "l2_normalize_rows");
    const int m = x->shape[0], n = x->shape[1];
    std::vector<double> out(x->data.size());
    std::vector<double> norms(m);
    for (int i = 0; i < m; ++i) {
        const double* xr = x->data.data() + static_cast<size_t>(i) * n;
        double sq = 0.0;
        for (int j = 0; j < n; ++j) sq += xr[j] * xr[j];
        const double norm = std::sqrt(sq);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw DegenerateEmbeddingError("l2_normalize_rows: zero-norm row " + std::to_string(i));
        }
        norms[i] = norm;
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] = xr[j] / norm;
    }
    auto t = new_node(x->shape, std::move(out), {x});
    if (t->requires_grad) {
        t->backward_fn = [x, m, n, norms = std::move(norms)](Tensor& self) {
            for (int i = 0; i < m; ++i) {
                const double* u = self.data.data() + static_cast<size_t>(i) * n;
                const double* g = self.grad.data() + static_cast<size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += g[j] * u[j];
                for (int j = 0; j < n; ++j) {
                    x->grad[static_cast<size_t>(i) * n + j] += (g[j] - u[j] * dot) / norms[i];
                }
            }
        };
    }
    return t;
}

TensorPtr sum_all(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->data) s += v;
    auto t = new_node({1}, {s}, {x});
    if (t->requires_grad) {
        t->backward_fn = [x](Tensor& self) {
            for (auto& g : x->grad) g += self.grad[0];
        };
    }
    return t;
}

TensorPtr mean_all(const TensorPtr& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x->numel()));
}

TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride) {
    require_2d(x, "conv1d");
    if (w->shape.size() != 3) {
        throw ValidationError("conv1d: weight must be 3-D [Cout,Cin,K], got " + w->shape_str());
    }
    const int t_in = x->shape[0], cin = x->shape[1];
    const int cout = w->shape[0], wcin = w->shape[1], k = w->shape[2];
    if (cin != wcin) {
        throw ValidationError("conv1d: channel mismatch " + x->shape_str() + " vs " + w->shape_str());
    }
    if (b->numel() != static_cast<size_t>(cout)) {
        throw ValidationError("conv1d: bias length " + std::to_string(b->numel()) +
                              " != out channels " + std::to_string(cout));
    }
    if (stride < 1) throw ValidationError("conv1d: stride must be >= 1");
    const int pad = k / 2;
    const int t_out = (t_in + 2 * pad - k) / stride + 1;
    std::vector<double> out(static_cast<size_t>(t_out) * cout);
    for (int t = 0; t < t_out; ++t) {
        double* orow = out.data() + static_cast<size_t>(t) * cout;
        for (int o = 0; o < cout; ++o) orow[o] = b->data[o];
        for (int kk = 0; kk < k; ++kk) {
            const int ti = t * stride + kk - pad;
            if (ti < 0 || ti >= t_in) continue;
            const double* xr = x->data.data() + static_cast<size_t>(ti) * cin;
            for (int o = 0; o < cout; ++o) {
                const double* wrow = w->data.data() + (static_cast<size_t>(o) * cin) * k;
                double acc = 0.0;
                for (int ci = 0; ci < cin; ++ci) {
                    acc += xr[ci] * wrow[static_cast<size_t>(ci) * k + kk];
                }
                orow[o] += acc;
            }
        }
    }
    auto t = new_node({t_out, cout}, std::move(out), {x, w, b});
    if (t->requires_grad) {
        t->backward_fn = [x, w, b, stride, t_in, cin, cout, k, pad, t_out](Tensor& self) {
            for (int t = 0; t < t_out; ++t) {
                const double* g = self.grad.data() + static_cast<size_t>(t) * cout;
                if (b->requires_grad) {
                    for (int o = 0; o < cout; ++o) b->grad[o] += g[o];
                }
                for (int kk = 0; kk < k; ++kk) {
                    const int ti = t * stride + kk - pad;
                    if (ti < 0 || ti >= t_in) continue;
                    const double* xr = x->data.data() + static_cast<size_t>(ti) * cin;
                    for (int o = 0; o < cout; ++o) {
                        const double go = g[o];
                        const double* wrow = w->data.data() + (static_cast<size_t>(o) * cin) * k;
                        if (x->requires_grad) {
                            double* dxr = x->grad.data() + static_cast<size_t>(ti) * cin;
                            for (int ci = 0; ci < cin; ++ci) {
                                dxr[ci] += go * wrow[static_cast<size_t>(ci) * k + kk];
                            }
                        }
                        if (w->requires_grad) {
                            double* dwrow = w->grad.data() + (static_cast<size_t>(o) * cin) * k;
                            for (int ci = 0; ci < cin; ++ci) {
                                dwrow[static_cast<size_t>(ci) * k + kk] += go * xr[ci];
                            }
                        }
                    }
                }
            }
        };
    }
    return t;
}

} // namespace wavlink::ops
