#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace acsqg::ad {

using Mat = Eigen::MatrixXd;

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Build a graph with the ops below,
// then call backward() on a 1x1 loss node. Leaves may register an external
// gradient sink that receives their accumulated gradient.
class Tape {
public:
    Var leaf(Mat value, Mat* grad_sink = nullptr);

    const Mat& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // elementwise
    Var mul_const(Var a, Mat mask); // elementwise by a constant (dropout)
    Var scale(Var a, double s);
    Var add_scalar(Var a, double c);
    Var one_minus(Var a);
    Var neg(Var a);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var log(Var a);
    Var transpose(Var a);
    Var concat_rows(const std::vector<Var>& parts); // vertical stack
    Var hstack(const std::vector<Var>& cols);
    Var col(Var m, int j);
    Var rows(Var a, int start, int count);
    Var pick(Var a, int i); // i-th element (column-major order) as 1x1
    Var softmax(Var a);     // over all elements (use on vectors)
    Var maxout_pairs(Var a); // column vector with even row count
    Var dot_const(Var a, Mat weights); // sum(a .* weights) as 1x1
    Var add_broadcast_col(Var m, Var colvec); // add colvec to every column

    void backward(Var loss);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&)> backprop; // null for leaves without sinks
    };

    Mat& grad(Var v);
    Var push(Mat value, std::function<void(Tape&)> backprop);

    std::vector<Node> nodes_;

    friend struct GradAccess;
public:
    // gradient of a node after backward(); mainly for tests
    const Mat& grad_of(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }
};

} // namespace acsqg::ad
