#include "specfuse/autodiff.hpp"

#include <cmath>
#include <unordered_map>

namespace specfuse::ad {

namespace {

std::string shape_str(const Mat& m) { return cat(m.rows(), "x", m.cols()); }

bool wants_grad(const Tensor& t) { return t.requires_grad(); }

/// Builds an op node. Parents that do not require gradients are still
/// recorded (the graph is a faithful trace) but receive no flow.
Tensor make_op(Mat value, std::vector<Tensor> parents,
               std::function<std::vector<Mat>(const Mat&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool any = false;
    for (const auto& p : parents) {
        any = any || p.requires_grad();
        n->parents.push_back(p.node());
    }
    n->requires_grad = any;
    if (any) n->backward_fn = std::move(backward_fn);
    return Tensor::from_node(std::move(n));
}

}  // namespace

Tensor Tensor::leaf(Mat value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad = Mat::Zero(n->value.rows(), n->value.cols());
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return leaf(Mat::Constant(1, 1, value), requires_grad);
}

const Mat& Tensor::grad() const {
    if (n_->grad.size() == 0) n_->grad = Mat::Zero(n_->value.rows(), n_->value.cols());
    return n_->grad;
}

void Tensor::zero_grad() {
    if (n_) n_->grad = Mat::Zero(n_->value.rows(), n_->value.cols());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul shape mismatch: ", shape_str(a.value()), " * ",
            shape_str(b.value()));
    Mat y = a.value() * b.value();
    const bool na = wants_grad(a), nb = wants_grad(b);
    auto an = a.node(), bn = b.node();
    return make_op(std::move(y), {a, b}, [na, nb, an, bn](const Mat& g) {
        std::vector<Mat> out(2);
        if (na) out[0] = g * bn->value.transpose();
        if (nb) out[1] = an->value.transpose() * g;
        return out;
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    const Mat& av = a.value();
    const Mat& bv = b.value();
    Mat y;
    enum class Mode { Plain, BroadcastB, BroadcastA } mode;
    if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
        mode = Mode::Plain;
        y = av + bv;
    } else if (bv.rows() == 1 && av.cols() == bv.cols()) {
        mode = Mode::BroadcastB;
        y = av.rowwise() + bv.row(0);
    } else if (av.rows() == 1 && bv.cols() == av.cols()) {
        mode = Mode::BroadcastA;
        y = bv.rowwise() + av.row(0);
    } else {
        raise("add shape mismatch: ", shape_str(av), " + ", shape_str(bv));
    }
    const bool na = wants_grad(a), nb = wants_grad(b);
    return make_op(std::move(y), {a, b}, [na, nb, mode](const Mat& g) {
        std::vector<Mat> out(2);
        if (na) out[0] = (mode == Mode::BroadcastA) ? Mat(g.colwise().sum()) : g;
        if (nb) out[1] = (mode == Mode::BroadcastB) ? Mat(g.colwise().sum()) : g;
        return out;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch: ",
            shape_str(a.value()), " - ", shape_str(b.value()));
    Mat y = a.value() - b.value();
    const bool na = wants_grad(a), nb = wants_grad(b);
    return make_op(std::move(y), {a, b}, [na, nb](const Mat& g) {
        std::vector<Mat> out(2);
        if (na) out[0] = g;
        if (nb) out[1] = -g;
        return out;
    });
}

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mul shape mismatch: ",
            shape_str(a.value()), " * ", shape_str(b.value()));
    Mat y = a.value().cwiseProduct(b.value());
    const bool na = wants_grad(a), nb = wants_grad(b);
    auto an = a.node(), bn = b.node();
    return make_op(std::move(y), {a, b}, [na, nb, an, bn](const Mat& g) {
        std::vector<Mat> out(2);
        if (na) out[0] = g.cwiseProduct(bn->value);
        if (nb) out[1] = g.cwiseProduct(an->value);
        return out;
    });
}

Tensor transpose_last_two(const Tensor& x) {
    Mat y = x.value().transpose();
    return make_op(std::move(y), {x}, [](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = g.transpose();
        return out;
    });
}

Tensor mean_rows(const Tensor& x) {
    const Eigen::Index t = x.rows();
    Mat y = x.value().colwise().mean();
    return make_op(std::move(y), {x}, [t](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = (1.0 / static_cast<double>(t)) * g.replicate(t, 1);
        return out;
    });
}

Tensor log(const Tensor& x) {
    Mat y = x.value().array().log();
    auto xn = x.node();
    return make_op(std::move(y), {x}, [xn](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = g.cwiseQuotient(xn->value);
        return out;
    });
}

Tensor exp(const Tensor& x) {
    Mat y = x.value().array().exp();
    auto yn = std::make_shared<Mat>(y);
    return make_op(std::move(y), {x}, [yn](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = g.cwiseProduct(*yn);
        return out;
    });
}

Tensor relu(const Tensor& x) {
    Mat y = x.value().cwiseMax(0.0);
    auto xn = x.node();
    return make_op(std::move(y), {x}, [xn](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = (xn->value.array() > 0.0).select(g, Mat::Zero(g.rows(), g.cols()));
        return out;
    });
}

Tensor sqrt(const Tensor& x) {
    Mat y = x.value().array().sqrt();
    auto yn = std::make_shared<Mat>(y);
    return make_op(std::move(y), {x}, [yn](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = 0.5 * g.cwiseQuotient(*yn);
        return out;
    });
}

Tensor scale(const Tensor& x, double c) {
    Mat y = c * x.value();
    return make_op(std::move(y), {x}, [c](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = c * g;
        return out;
    });
}

Tensor add_scalar(const Tensor& x, double c) {
    Mat y = x.value().array() + c;
    return make_op(std::move(y), {x}, [](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = g;
        return out;
    });
}

Tensor softmax_rows(const Tensor& x, double input_scale) {
    require(input_scale > 0.0, "softmax input scale must be positive");
    const Mat& xv = x.value();
    Mat y(xv.rows(), xv.cols());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const Eigen::ArrayXd row = input_scale * xv.row(r).transpose().array();
        const Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
        y.row(r) = (e / e.sum()).transpose();
    }
    auto yn = std::make_shared<Mat>(y);
    return make_op(std::move(y), {x}, [yn, input_scale](const Mat& g) {
        std::vector<Mat> out(1);
        Mat gx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double dot = g.row(r).dot(yn->row(r));
            gx.row(r) =
                input_scale * yn->row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        out[0] = std::move(gx);
        return out;
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    return add(matmul(x, weight), bias);
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows(), "concat leading-shape mismatch: ", shape_str(a.value()), " vs ",
            shape_str(b.value()));
    Mat y(a.rows(), a.cols() + b.cols());
    y.leftCols(a.cols()) = a.value();
    y.rightCols(b.cols()) = b.value();
    const Eigen::Index da = a.cols(), db = b.cols();
    const bool na = wants_grad(a), nb = wants_grad(b);
    return make_op(std::move(y), {a, b}, [da, db, na, nb](const Mat& g) {
        std::vector<Mat> out(2);
        if (na) out[0] = g.leftCols(da);
        if (nb) out[1] = g.rightCols(db);
        return out;
    });
}

Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index n) {
    require(start >= 0 && n >= 0 && start + n <= x.cols(), "slice_cols out of range: [", start,
            ", ", start + n, ") of ", x.cols(), " cols");
    Mat y = x.value().middleCols(start, n);
    const Eigen::Index total = x.cols();
    return make_op(std::move(y), {x}, [start, n, total](const Mat& g) {
        std::vector<Mat> out(1);
        Mat gx = Mat::Zero(g.rows(), total);
        gx.middleCols(start, n) = g;
        out[0] = std::move(gx);
        return out;
    });
}

Tensor mul_rowwise(const Tensor& x, const Tensor& col) {
    require(col.cols() == 1 && col.rows() == x.rows(), "mul_rowwise expects a ", x.rows(),
            "x1 column, got ", shape_str(col.value()));
    Mat y = x.value().array().colwise() * col.value().col(0).array();
    const bool nx = wants_grad(x), nc = wants_grad(col);
    auto xn = x.node(), cn = col.node();
    return make_op(std::move(y), {x, col}, [nx, nc, xn, cn](const Mat& g) {
        std::vector<Mat> out(2);
        if (nx) out[0] = g.array().colwise() * cn->value.col(0).array();
        if (nc) out[1] = g.cwiseProduct(xn->value).rowwise().sum();
        return out;
    });
}

Tensor sum_all(const Tensor& x) {
    Mat y = Mat::Constant(1, 1, x.value().sum());
    const Eigen::Index r = x.rows(), c = x.cols();
    return make_op(std::move(y), {x}, [r, c](const Mat& g) {
        std::vector<Mat> out(1);
        out[0] = Mat::Constant(r, c, g(0, 0));
        return out;
    });
}

Tensor cross_entropy(const Tensor& logits, int label) {
    require(logits.rows() == 1, "cross_entropy expects a single logits row, got ",
            shape_str(logits.value()));
    require(label >= 0 && label < logits.cols(), "label ", label, " out of range for ",
            logits.cols(), " classes");
    const Eigen::ArrayXd row = logits.value().row(0).transpose().array();
    const double m = row.maxCoeff();
    const Eigen::ArrayXd e = (row - m).exp();
    const double lse = m + std::log(e.sum());
    Mat y = Mat::Constant(1, 1, lse - row(label));
    auto probs = std::make_shared<Eigen::ArrayXd>(e / e.sum());
    return make_op(std::move(y), {logits}, [probs, label](const Mat& g) {
        std::vector<Mat> out(1);
        Mat gx = g(0, 0) * probs->matrix().transpose();
        gx(0, label) -= g(0, 0);
        out[0] = std::move(gx);
        return out;
    });
}

void backward(const Tensor& loss) {
    require(loss.defined(), "backward on undefined tensor");
    require(loss.rows() == 1 && loss.cols() == 1, "backward expects a scalar loss, got ",
            shape_str(loss.value()));
    if (!loss.requires_grad()) return;  // nothing trainable is reachable

    // Iterative post-order DFS for a deterministic topological order.
    std::vector<Node*> topo;
    std::unordered_map<Node*, int> state;  // 0 new, 1 open, 2 done
    std::vector<Node*> stack{loss.node().get()};
    while (!stack.empty()) {
        Node* n = stack.back();
        const int st = state[n];
        if (st == 0) {
            state[n] = 1;
            for (const auto& p : n->parents)
                if (p->requires_grad && state[p.get()] == 0) stack.push_back(p.get());
        } else {
            stack.pop_back();
            if (st == 1) {
                state[n] = 2;
                topo.push_back(n);
            }
        }
    }

    // Pass-local flow keeps repeated backward() calls independent, so
    // gradients in node.grad accumulate exactly additively.
    std::unordered_map<Node*, Mat> flow;
    flow[loss.node().get()] = Mat::Constant(1, 1, 1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        auto fit = flow.find(n);
        if (fit == flow.end()) continue;
        const Mat g = std::move(fit->second);
        flow.erase(fit);
        if (n->requires_grad) {
            if (n->grad.size() == 0) n->grad = Mat::Zero(n->value.rows(), n->value.cols());
            n->grad += g;
        }
        if (!n->backward_fn) continue;
        auto contribs = n->backward_fn(g);
        for (size_t i = 0; i < n->parents.size(); ++i) {
            if (contribs[i].size() == 0) continue;
            Node* p = n->parents[i].get();
            if (!p->requires_grad) continue;
            auto [pit, fresh] = flow.try_emplace(p, std::move(contribs[i]));
            if (!fresh) pit->second += contribs[i];
        }
    }
}

}  // namespace specfuse::ad
