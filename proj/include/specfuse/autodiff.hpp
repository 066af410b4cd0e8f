#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "specfuse/mat.hpp"

namespace specfuse::ad {

/// One vertex of the dynamic compute graph built during forward evaluation.
struct Node {
    Mat value;
    Mat grad;  // allocated on first deposit; same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    /// Maps the incoming gradient to per-parent contributions; an empty Mat
    /// marks a parent that needs no gradient.
    std::function<std::vector<Mat>(const Mat&)> backward_fn;
};

/// Value-semantics handle to a graph node. Copying shares the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor leaf(Mat value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(n_); }
    const Mat& value() const { return n_->value; }
    /// Mutable access for optimizer updates; only meaningful on leaves.
    Mat& value_mut() { return n_->value; }
    /// Accumulated gradient; zeros if backward has not reached this node.
    const Mat& grad() const;
    bool requires_grad() const { return n_ && n_->requires_grad; }
    void zero_grad();

    Eigen::Index rows() const { return n_->value.rows(); }
    Eigen::Index cols() const { return n_->value.cols(); }

    const std::shared_ptr<Node>& node() const { return n_; }
    static Tensor from_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

private:
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
    std::shared_ptr<Node> n_;
};

/// a[m,k] * b[k,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Same shapes, or a 1-row operand broadcast across the other's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor transpose_last_two(const Tensor& x);
/// T x D -> 1 x D column means.
Tensor mean_rows(const Tensor& x);
Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
/// Row-wise softmax of (input_scale * x); numerically stabilized.
Tensor softmax_rows(const Tensor& x, double input_scale = 1.0);
/// x * w + b with b broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor concat_last_axis(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index n);
/// Scales row t of x by col(t, 0).
Tensor mul_rowwise(const Tensor& x, const Tensor& col);
Tensor sum_all(const Tensor& x);
/// -log softmax(logits)[label] for a 1 x C logits row, label in [0, C).
Tensor cross_entropy(const Tensor& logits, int label);

/// Reverse-mode pass from a scalar loss. Gradients accumulate additively
/// into every reachable requires_grad node; call zero_grad between steps.
void backward(const Tensor& loss);

}  // namespace specfuse::ad
