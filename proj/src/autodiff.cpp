#include "acsqg/autodiff.hpp"

#include <cmath>

#include "acsqg/errors.hpp"

namespace acsqg::ad {

Mat& Tape::grad(Var v) {
    Node& n = nodes_[static_cast<size_t>(v.id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::push(Mat value, std::function<void(Tape&)> backprop) {
    nodes_.push_back({std::move(value), Mat(), std::move(backprop)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value, Mat* grad_sink) {
    if (!grad_sink) return push(std::move(value), nullptr);
    Var v{static_cast<int>(nodes_.size())};
    return push(std::move(value), [v, grad_sink](Tape& t) {
        if (grad_sink->size() == 0)
            *grad_sink = Mat::Zero(t.val(v).rows(), t.val(v).cols());
        *grad_sink += t.grad(v);
    });
}

Var Tape::matmul(Var a, Var b) {
    Var out{static_cast<int>(nodes_.size())};
    Mat value = val(a) * val(b);
    return push(std::move(value), [a, b, out](Tape& t) {
        const Mat& g = t.grad(out);
        t.grad(a) += g * t.val(b).transpose();
        t.grad(b) += t.val(a).transpose() * g;
    });
}

Var Tape::add(Var a, Var b) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a) + val(b), [a, b, out](Tape& t) {
        t.grad(a) += t.grad(out);
        t.grad(b) += t.grad(out);
    });
}

Var Tape::sub(Var a, Var b) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a) - val(b), [a, b, out](Tape& t) {
        t.grad(a) += t.grad(out);
        t.grad(b) -= t.grad(out);
    });
}

Var Tape::mul(Var a, Var b) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a).cwiseProduct(val(b)), [a, b, out](Tape& t) {
        t.grad(a) += t.grad(out).cwiseProduct(t.val(b));
        t.grad(b) += t.grad(out).cwiseProduct(t.val(a));
    });
}

Var Tape::mul_const(Var a, Mat mask) {
    Var out{static_cast<int>(nodes_.size())};
    Mat value = val(a).cwiseProduct(mask);
    return push(std::move(value), [a, out, mask = std::move(mask)](Tape& t) {
        t.grad(a) += t.grad(out).cwiseProduct(mask);
    });
}

Var Tape::scale(Var a, double s) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a) * s, [a, out, s](Tape& t) { t.grad(a) += t.grad(out) * s; });
}

Var Tape::add_scalar(Var a, double c) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a).array() + c, [a, out](Tape& t) { t.grad(a) += t.grad(out); });
}

Var Tape::one_minus(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    return push(Mat(1.0 - val(a).array()), [a, out](Tape& t) { t.grad(a) -= t.grad(out); });
}

Var Tape::neg(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    return push(-val(a), [a, out](Tape& t) { t.grad(a) -= t.grad(out); });
}

Var Tape::tanh(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    return push(Mat(val(a).array().tanh()), [a, out](Tape& t) {
        t.grad(a) += t.grad(out).cwiseProduct(Mat(1.0 - t.val(out).array().square()));
    });
}

Var Tape::sigmoid(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    Mat value = Mat(1.0 / (1.0 + (-val(a).array()).exp()));
    return push(std::move(value), [a, out](Tape& t) {
        const Mat& s = t.val(out);
        t.grad(a) += t.grad(out).cwiseProduct(Mat(s.array() * (1.0 - s.array())));
    });
}

Var Tape::log(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    return push(Mat(val(a).array().log()), [a, out](Tape& t) {
        t.grad(a) += t.grad(out).cwiseQuotient(t.val(a));
    });
}

Var Tape::transpose(Var a) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a).transpose(), [a, out](Tape& t) {
        t.grad(a) += t.grad(out).transpose();
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ModelError("concat_rows: empty");
    long rows = 0;
    const long cols = val(parts[0]).cols();
    for (Var p : parts) rows += val(p).rows();
    Mat value(rows, cols);
    long at = 0;
    for (Var p : parts) {
        value.middleRows(at, val(p).rows()) = val(p);
        at += val(p).rows();
    }
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [parts, out](Tape& t) {
        long at2 = 0;
        for (Var p : parts) {
            t.grad(p) += t.grad(out).middleRows(at2, t.val(p).rows());
            at2 += t.val(p).rows();
        }
    });
}

Var Tape::hstack(const std::vector<Var>& cols) {
    if (cols.empty()) throw ModelError("hstack: empty");
    const long rows = val(cols[0]).rows();
    Mat value(rows, static_cast<long>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) value.col(static_cast<long>(j)) = val(cols[j]);
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [cols, out](Tape& t) {
        for (size_t j = 0; j < cols.size(); ++j)
            t.grad(cols[j]) += t.grad(out).col(static_cast<long>(j));
    });
}

Var Tape::col(Var m, int j) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(m).col(j), [m, j, out](Tape& t) {
        t.grad(m).col(j) += t.grad(out);
    });
}

Var Tape::rows(Var a, int start, int count) {
    Var out{static_cast<int>(nodes_.size())};
    return push(val(a).middleRows(start, count), [a, start, count, out](Tape& t) {
        t.grad(a).middleRows(start, count) += t.grad(out);
    });
}

Var Tape::pick(Var a, int i) {
    Var out{static_cast<int>(nodes_.size())};
    Mat value(1, 1);
    value(0, 0) = val(a)(i);
    return push(std::move(value), [a, i, out](Tape& t) {
        t.grad(a)(i) += t.grad(out)(0, 0);
    });
}

Var Tape::softmax(Var a) {
    const Mat& x = val(a);
    const double m = x.maxCoeff();
    Mat e = (x.array() - m).exp();
    Mat value = e / e.sum();
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [a, out](Tape& t) {
        const Mat& y = t.val(out);
        const Mat& g = t.grad(out);
        const double dot = (y.array() * g.array()).sum();
        t.grad(a) += Mat(y.array() * (g.array() - dot));
    });
}

Var Tape::maxout_pairs(Var a) {
    const Mat& x = val(a);
    if (x.cols() != 1 || x.rows() % 2 != 0)
        throw ModelError("maxout_pairs: need even-length column vector");
    const long half = x.rows() / 2;
    Mat value(half, 1);
    std::vector<int> argmax(static_cast<size_t>(half));
    for (long j = 0; j < half; ++j) {
        const long i0 = 2 * j, i1 = 2 * j + 1;
        if (x(i0) >= x(i1)) {
            value(j) = x(i0);
            argmax[static_cast<size_t>(j)] = static_cast<int>(i0);
        } else {
            value(j) = x(i1);
            argmax[static_cast<size_t>(j)] = static_cast<int>(i1);
        }
    }
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [a, out, argmax = std::move(argmax)](Tape& t) {
        for (long j = 0; j < static_cast<long>(argmax.size()); ++j)
            t.grad(a)(argmax[static_cast<size_t>(j)]) += t.grad(out)(j);
    });
}

Var Tape::dot_const(Var a, Mat weights) {
    Mat value(1, 1);
    value(0, 0) = (val(a).array() * weights.array()).sum();
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [a, out, weights = std::move(weights)](Tape& t) {
        t.grad(a) += weights * t.grad(out)(0, 0);
    });
}

Var Tape::add_broadcast_col(Var m, Var colvec) {
    Mat value = val(m);
    value.colwise() += Eigen::VectorXd(val(colvec).col(0));
    Var out{static_cast<int>(nodes_.size())};
    return push(std::move(value), [m, colvec, out](Tape& t) {
        t.grad(m) += t.grad(out);
        t.grad(colvec) += t.grad(out).rowwise().sum();
    });
}

void Tape::backward(Var loss) {
    if (val(loss).rows() != 1 || val(loss).cols() != 1)
        throw ModelError("backward: loss must be 1x1");
    grad(loss)(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.backprop && n.grad.size() != 0) n.backprop(*this);
    }
}

} // namespace acsqg::ad
