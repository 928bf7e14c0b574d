#include "dgad/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace dgad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

std::atomic<std::uint64_t> g_next_seq{1};
thread_local bool t_grad_enabled = true;
thread_local std::uint64_t* t_seq_override = nullptr;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::string shape_of(const Node& n) {
    return "[" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + "]";
}

[[noreturn]] void shape_error(const char* op, const Node& a, const Node& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " +
                                shape_of(b));
}

void require_defined(const char* op, const Tensor& t) {
    if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

NodePtr new_node(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
    if (data.size() != rows * cols) {
        throw std::invalid_argument("tensor: " + std::to_string(data.size()) +
                                    " values do not fill shape [" + std::to_string(rows) + "x" +
                                    std::to_string(cols) + "]");
    }
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->data.size(), 0.0);
    n->seq = t_seq_override ? (*t_seq_override)++ : g_next_seq.fetch_add(1, std::memory_order_relaxed);
    return n;
}

void check_finite(const char* op, const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::domain_error(std::string(op) + ": non-finite value");
    }
}

// Builds the result node; history is attached only when some parent needs it.
Tensor make_result(const char* op, std::size_t rows, std::size_t cols, std::vector<double> data,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
    check_finite(op, data);
    bool needs = false;
    if (t_grad_enabled) {
        for (const auto& p : parents) needs = needs || p->requires_grad;
    }
    auto n = new_node(rows, cols, std::move(data), needs);
    if (needs) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward);
    }
    return Tensor(std::move(n));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return Tensor(new_node(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
    return Tensor(new_node(rows, cols, std::vector<double>(rows * cols, value), requires_grad));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
    check_finite("tensor", values);
    return Tensor(new_node(rows, cols, std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from(1, 1, {value}, requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
    const std::size_t n = values.size();
    return from(1, n, std::move(values), requires_grad);
}

Tensor Tensor::mask(std::size_t rows, std::size_t cols, std::vector<double> values) {
    for (double v : values) {
        if (v != 0.0 && v != kMasked) {
            throw std::invalid_argument("mask: entries must be 0 or -inf");
        }
    }
    return Tensor(new_node(rows, cols, std::move(values), false));
}

std::string Tensor::shape_str() const { return shape_of(*node_); }

std::span<double> Tensor::mutable_data() {
    if (!node_->is_leaf()) throw std::logic_error("tensor: mutable_data on a non-leaf tensor");
    return node_->data;
}

double Tensor::item() const {
    if (size() != 1) throw std::invalid_argument("item: tensor " + shape_str() + " is not a scalar");
    return node_->data[0];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

void Tensor::backward() const { Tape::record(*this).replay(); }

Tensor Tensor::detach() const {
    return Tensor(new_node(rows(), cols(), node_->data, false));
}

Tape Tape::record(const Tensor& root) {
    require_defined("backward", root);
    if (root.size() != 1) {
        throw std::invalid_argument("backward: root " + root.shape_str() + " is not a scalar");
    }
    Tape tape;
    tape.root_ = root;
    std::unordered_set<const Node*> seen;
    std::vector<NodePtr> stack{root.node()};
    while (!stack.empty()) {
        NodePtr n = std::move(stack.back());
        stack.pop_back();
        if (!n->requires_grad || !seen.insert(n.get()).second) continue;
        if (!n->is_leaf()) {
            for (const auto& p : n->parents) stack.push_back(p);
            tape.order_.push_back(std::move(n));
        }
    }
    std::sort(tape.order_.begin(), tape.order_.end(),
              [](const NodePtr& a, const NodePtr& b) { return a->seq > b->seq; });
    return tape;
}

void Tape::replay() const {
    Node& root = *root_.node();
    if (!root.requires_grad) return;
    for (const auto& n : order_) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    root.grad[0] += 1.0;
    for (const auto& n : order_) n->backward_fn(*n);
}

std::vector<std::uint64_t> Tape::replay_sequence() const {
    std::vector<std::uint64_t> out;
    out.reserve(order_.size());
    for (const auto& n : order_) out.push_back(n->seq);
    return out;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

std::uint64_t SequenceBlock::reserve(std::size_t count) {
    return g_next_seq.fetch_add(count * kSize, std::memory_order_relaxed);
}

SequenceBlock::SequenceBlock(std::uint64_t first) : next_(first), previous_(t_seq_override) {
    t_seq_override = &next_;
}

SequenceBlock::~SequenceBlock() { t_seq_override = previous_; }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined("matmul", a);
    require_defined("matmul", b);
    if (a.cols() != b.rows()) shape_error("matmul", *a.node(), *b.node());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n);
    MutMap(out.data(), m, n).noalias() =
        ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
    return make_result("matmul", m, n, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
        ConstMap g(self.grad.data(), m, n);
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) {
            MutMap(pa.grad.data(), m, k).noalias() += g * ConstMap(pb.data.data(), k, n).transpose();
        }
        if (pb.requires_grad) {
            MutMap(pb.grad.data(), k, n).noalias() += ConstMap(pa.data.data(), m, k).transpose() * g;
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_defined("transpose", a);
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    MutMap(out.data(), n, m) = ConstMap(a.data().data(), m, n).transpose();
    return make_result("transpose", n, m, std::move(out), {a.node()}, [m, n](Node& self) {
        MutMap(parent(self, 0).grad.data(), m, n) += ConstMap(self.grad.data(), n, m).transpose();
    });
}

namespace {

// add/sub share broadcasting rules: b is same-shape or a [1 x n] row.
Tensor add_like(const char* op, const Tensor& a, const Tensor& b, double sign) {
    require_defined(op, a);
    require_defined(op, b);
    const bool same = a.rows() == b.rows() && a.cols() == b.cols();
    const bool bcast = b.rows() == 1 && b.cols() == a.cols();
    if (!same && !bcast) shape_error(op, *a.node(), *b.node());
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(a.data().begin(), a.data().end());
    auto bd = b.data();
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] += sign * bd[same ? r * n + c : c];
    }
    return make_result(op, m, n, std::move(out), {a.node(), b.node()},
                       [m, n, same, sign](Node& self) {
                           Node& pa = parent(self, 0);
                           Node& pb = parent(self, 1);
                           if (pa.requires_grad) {
                               for (std::size_t i = 0; i < m * n; ++i) pa.grad[i] += self.grad[i];
                           }
                           if (pb.requires_grad) {
                               for (std::size_t r = 0; r < m; ++r) {
                                   for (std::size_t c = 0; c < n; ++c) {
                                       pb.grad[same ? r * n + c : c] += sign * self.grad[r * n + c];
                                   }
                               }
                           }
                       });
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename F, typename D>
Tensor unary(const char* op, const Tensor& a, F f, D dfdx) {
    require_defined(op, a);
    std::vector<double> out(a.size());
    auto ad = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(ad[i]);
    return make_result(op, a.rows(), a.cols(), std::move(out), {a.node()}, [dfdx](Node& self) {
        Node& p = parent(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            p.grad[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like("add", a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like("sub", a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
    require_defined("mul", a);
    require_defined("mul", b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", *a.node(), *b.node());
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_result("mul", a.rows(), a.cols(), std::move(out), {a.node(), b.node()},
                       [](Node& self) {
                           Node& pa = parent(self, 0);
                           Node& pb = parent(self, 1);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.data[i];
                               if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.data[i];
                           }
                       });
}

Tensor scale(const Tensor& a, double factor) {
    return unary("scale", a, [factor](double x) { return factor * x; },
                 [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary("add_scalar", a, [value](double x) { return x + value; },
                 [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary("log", a, [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
}

Tensor expm1(const Tensor& a) {
    return unary("expm1", a, [](double x) { return std::expm1(x); },
                 [](double, double y) { return y + 1.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    return unary("clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t m = parts[0].rows();
    std::vector<std::size_t> offsets;
    std::size_t n = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        require_defined("concat_cols", p);
        if (p.rows() != m) shape_error("concat_cols", *parts[0].node(), *p.node());
        offsets.push_back(n);
        n += p.cols();
        parents.push_back(p.node());
    }
    std::vector<double> out(m * n);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t w = parts[k].cols();
        auto d = parts[k].data();
        for (std::size_t r = 0; r < m; ++r) {
            std::copy_n(d.begin() + r * w, w, out.begin() + r * n + offsets[k]);
        }
    }
    return make_result("concat_cols", m, n, std::move(out), std::move(parents),
                       [m, n, offsets](Node& self) {
                           for (std::size_t k = 0; k < self.parents.size(); ++k) {
                               Node& p = parent(self, k);
                               if (!p.requires_grad) continue;
                               for (std::size_t r = 0; r < m; ++r) {
                                   for (std::size_t c = 0; c < p.cols; ++c) {
                                       p.grad[r * p.cols + c] += self.grad[r * n + offsets[k] + c];
                                   }
                               }
                           }
                       });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    std::vector<NodePtr> parents;
    std::vector<double> out;
    for (const auto& p : parts) {
        require_defined("concat_rows", p);
        if (p.cols() != n) shape_error("concat_rows", *parts[0].node(), *p.node());
        m += p.rows();
        out.insert(out.end(), p.data().begin(), p.data().end());
        parents.push_back(p.node());
    }
    return make_result("concat_rows", m, n, std::move(out), std::move(parents), [](Node& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            Node& p = parent(self, k);
            if (p.requires_grad) {
                for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += self.grad[offset + i];
            }
            offset += p.data.size();
        }
    });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
    require_defined("slice_cols", a);
    if (start + count > a.cols()) {
        throw std::invalid_argument("slice_cols: columns [" + std::to_string(start) + ", " +
                                    std::to_string(start + count) + ") out of range for " +
                                    a.shape_str());
    }
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * count);
    for (std::size_t r = 0; r < m; ++r) {
        std::copy_n(a.data().begin() + r * n + start, count, out.begin() + r * count);
    }
    return make_result("slice_cols", m, count, std::move(out), {a.node()},
                       [m, n, start, count](Node& self) {
                           Node& p = parent(self, 0);
                           for (std::size_t r = 0; r < m; ++r) {
                               for (std::size_t c = 0; c < count; ++c) {
                                   p.grad[r * n + start + c] += self.grad[r * count + c];
                               }
                           }
                       });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
    require_defined("gather_rows", a);
    const std::size_t n = a.cols();
    std::vector<std::size_t> idx(index.begin(), index.end());
    std::vector<double> out(idx.size() * n);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= a.rows()) {
            throw std::out_of_range("gather_rows: row " + std::to_string(idx[r]) +
                                    " out of range for " + a.shape_str());
        }
        std::copy_n(a.data().begin() + idx[r] * n, n, out.begin() + r * n);
    }
    const std::size_t m = idx.size();
    return make_result("gather_rows", m, n, std::move(out), {a.node()},
                       [idx = std::move(idx), n](Node& self) {
                           Node& p = parent(self, 0);
                           for (std::size_t r = 0; r < idx.size(); ++r) {
                               for (std::size_t c = 0; c < n; ++c) {
                                   p.grad[idx[r] * n + c] += self.grad[r * n + c];
                               }
                           }
                       });
}

Tensor row_softmax(const Tensor& a, const Tensor& mask) {
    require_defined("row_softmax", a);
    const std::size_t m = a.rows(), n = a.cols();
    if (mask.defined() && (mask.rows() != m || mask.cols() != n)) {
        shape_error("row_softmax", *a.node(), *mask.node());
    }
    std::vector<double> out(m * n);
    for (std::size_t r = 0; r < m; ++r) {
        double mx = kMasked;
        for (std::size_t c = 0; c < n; ++c) {
            const double mk = mask.defined() ? mask.data()[r * n + c] : 0.0;
            if (mk != 0.0 && mk != kMasked) {
                throw std::invalid_argument("row_softmax: mask entries must be 0 or -inf");
            }
            if (mk == 0.0) mx = std::max(mx, a.data()[r * n + c]);
        }
        if (mx == kMasked) throw std::domain_error("row_softmax: fully masked row");
        double z = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const bool masked = mask.defined() && mask.data()[r * n + c] == kMasked;
            const double e = masked ? 0.0 : std::exp(a.data()[r * n + c] - mx);
            out[r * n + c] = e;
            z += e;
        }
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= z;
    }
    return make_result("row_softmax", m, n, std::move(out), {a.node()}, [m, n](Node& self) {
        Node& p = parent(self, 0);
        for (std::size_t r = 0; r < m; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < n; ++c) dot += self.grad[r * n + c] * self.data[r * n + c];
            for (std::size_t c = 0; c < n; ++c) {
                const double y = self.data[r * n + c];
                p.grad[r * n + c] += y * (self.grad[r * n + c] - dot);
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_defined("layer_norm", x);
    require_defined("layer_norm", gamma);
    require_defined("layer_norm", beta);
    const std::size_t m = x.rows(), n = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != n) shape_error("layer_norm", *x.node(), *gamma.node());
    if (beta.rows() != 1 || beta.cols() != n) shape_error("layer_norm", *x.node(), *beta.node());
    std::vector<double> xhat(m * n);
    std::vector<double> inv_std(m);
    std::vector<double> out(m * n);
    auto xd = x.data();
    for (std::size_t r = 0; r < m; ++r) {
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += xd[r * n + c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (xd[r * n + c] - mu) * (xd[r * n + c] - mu);
        var /= static_cast<double>(n);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < n; ++c) {
            xhat[r * n + c] = (xd[r * n + c] - mu) * inv_std[r];
            out[r * n + c] = gamma.data()[c] * xhat[r * n + c] + beta.data()[c];
        }
    }
    return make_result(
        "layer_norm", m, n, std::move(out), {x.node(), gamma.node(), beta.node()},
        [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            Node& px = parent(self, 0);
            Node& pg = parent(self, 1);
            Node& pb = parent(self, 2);
            const double dn = static_cast<double>(n);
            for (std::size_t r = 0; r < m; ++r) {
                double mean_d = 0.0, mean_dx = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double g = self.grad[r * n + c];
                    if (pg.requires_grad) pg.grad[c] += g * xhat[r * n + c];
                    if (pb.requires_grad) pb.grad[c] += g;
                    const double d = g * pg.data[c];
                    mean_d += d;
                    mean_dx += d * xhat[r * n + c];
                }
                if (!px.requires_grad) continue;
                mean_d /= dn;
                mean_dx /= dn;
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = self.grad[r * n + c] * pg.data[c];
                    px.grad[r * n + c] += inv_std[r] * (d - mean_d - xhat[r * n + c] * mean_dx);
                }
            }
        });
}

Tensor sum(const Tensor& a) {
    require_defined("sum", a);
    double s = 0.0;
    for (double v : a.data()) s += v;
    return make_result("sum", 1, 1, {s}, {a.node()}, [](Node& self) {
        Node& p = parent(self, 0);
        for (double& g : p.grad) g += self.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    require_defined("mean", a);
    if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor squared_norm(const Tensor& a) {
    require_defined("squared_norm", a);
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return make_result("squared_norm", 1, 1, {s}, {a.node()}, [](Node& self) {
        Node& p = parent(self, 0);
        for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += 2.0 * p.data[i] * self.grad[0];
    });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    require_defined("cosine_similarity", a);
    require_defined("cosine_similarity", b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_error("cosine_similarity", *a.node(), *b.node());
    }
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a.data()[i] * b.data()[i];
        aa += a.data()[i] * a.data()[i];
        bb += b.data()[i] * b.data()[i];
    }
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    const bool degenerate = na == 0.0 || nb == 0.0;
    const double cos = degenerate ? 0.0 : ab / (na * nb);
    return make_result("cosine_similarity", 1, 1, {cos}, {a.node(), b.node()},
                       [degenerate, na, nb, cos](Node& self) {
                           if (degenerate) return;
                           Node& pa = parent(self, 0);
                           Node& pb = parent(self, 1);
                           const double g = self.grad[0];
                           for (std::size_t i = 0; i < pa.data.size(); ++i) {
                               const double ai = pa.data[i], bi = pb.data[i];
                               if (pa.requires_grad) {
                                   pa.grad[i] += g * (bi / (na * nb) - cos * ai / (na * na));
                               }
                               if (pb.requires_grad) {
                                   pb.grad[i] += g * (ai / (na * nb) - cos * bi / (nb * nb));
                               }
                           }
                       });
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    require_defined("rowwise_dot", a);
    require_defined("rowwise_dot", b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("rowwise_dot", *a.node(), *b.node());
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) out[r] += a.data()[r * n + c] * b.data()[r * n + c];
    }
    return make_result("rowwise_dot", m, 1, std::move(out), {a.node(), b.node()},
                       [m, n](Node& self) {
                           Node& pa = parent(self, 0);
                           Node& pb = parent(self, 1);
                           for (std::size_t r = 0; r < m; ++r) {
                               const double g = self.grad[r];
                               for (std::size_t c = 0; c < n; ++c) {
                                   if (pa.requires_grad) pa.grad[r * n + c] += g * pb.data[r * n + c];
                                   if (pb.requires_grad) pb.grad[r * n + c] += g * pa.data[r * n + c];
                               }
                           }
                       });
}

Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment,
                       std::size_t count) {
    require_defined("segment_softmax", logits);
    if (logits.cols() != 1 || logits.rows() != segment.size()) {
        throw std::invalid_argument("segment_softmax: logits " + logits.shape_str() +
                                    " vs segment ids [" + std::to_string(segment.size()) + "]");
    }
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    std::vector<double> mx(count, kMasked), z(count, 0.0);
    auto x = logits.data();
    for (std::size_t r = 0; r < seg.size(); ++r) {
        if (seg[r] >= count) throw std::out_of_range("segment_softmax: segment id out of range");
        mx[seg[r]] = std::max(mx[seg[r]], x[r]);
    }
    std::vector<double> out(seg.size());
    for (std::size_t r = 0; r < seg.size(); ++r) {
        out[r] = std::exp(x[r] - mx[seg[r]]);
        z[seg[r]] += out[r];
    }
    for (std::size_t r = 0; r < seg.size(); ++r) out[r] /= z[seg[r]];
    const std::size_t m = seg.size();
    return make_result("segment_softmax", m, 1, std::move(out), {logits.node()},
                       [seg = std::move(seg), count](Node& self) {
                           Node& p = parent(self, 0);
                           std::vector<double> dot(count, 0.0);
                           for (std::size_t r = 0; r < seg.size(); ++r) {
                               dot[seg[r]] += self.grad[r] * self.data[r];
                           }
                           for (std::size_t r = 0; r < seg.size(); ++r) {
                               p.grad[r] += self.data[r] * (self.grad[r] - dot[seg[r]]);
                           }
                       });
}

Tensor segment_sum(const Tensor& x, std::span<const std::size_t> segment, std::size_t count) {
    require_defined("segment_sum", x);
    if (x.rows() != segment.size()) {
        throw std::invalid_argument("segment_sum: input " + x.shape_str() + " vs segment ids [" +
                                    std::to_string(segment.size()) + "]");
    }
    const std::size_t n = x.cols();
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    std::vector<double> out(count * n, 0.0);
    for (std::size_t r = 0; r < seg.size(); ++r) {
        if (seg[r] >= count) throw std::out_of_range("segment_sum: segment id out of range");
        for (std::size_t c = 0; c < n; ++c) out[seg[r] * n + c] += x.data()[r * n + c];
    }
    return make_result("segment_sum", count, n, std::move(out), {x.node()},
                       [seg = std::move(seg), n](Node& self) {
                           Node& p = parent(self, 0);
                           for (std::size_t r = 0; r < seg.size(); ++r) {
                               for (std::size_t c = 0; c < n; ++c) {
                                   p.grad[r * n + c] += self.grad[seg[r] * n + c];
                               }
                           }
                       });
}

Tensor scale_rows(const Tensor& x, const Tensor& w) {
    require_defined("scale_rows", x);
    require_defined("scale_rows", w);
    if (w.cols() != 1 || w.rows() != x.rows()) shape_error("scale_rows", *x.node(), *w.node());
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = x.data()[r * n + c] * w.data()[r];
    }
    return make_result("scale_rows", m, n, std::move(out), {x.node(), w.node()},
                       [m, n](Node& self) {
                           Node& px = parent(self, 0);
                           Node& pw = parent(self, 1);
                           for (std::size_t r = 0; r < m; ++r) {
                               for (std::size_t c = 0; c < n; ++c) {
                                   const double g = self.grad[r * n + c];
                                   if (px.requires_grad) px.grad[r * n + c] += g * pw.data[r];
                                   if (pw.requires_grad) pw.grad[r] += g * px.data[r * n + c];
                               }
                           }
                       });
}

}  // namespace dgad
