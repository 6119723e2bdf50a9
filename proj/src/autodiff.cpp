/*
 * Copyright 2026 The GPCL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gpcl/core/autodiff.hpp"

#include <cmath>

namespace gpcl::ad {

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::parameter(const Matrix& value, Matrix* grad_sink) {
    if (grad_sink != nullptr) require_shape(*grad_sink, value.rows(), value.cols(), "parameter gradient");
    Var v = record(value, true, nullptr);
    nodes_[v.id].sink = grad_sink;
    return v;
}

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_storage(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(Var v, const Matrix& delta) {
    if (!nodes_[v.id].requires_grad) return;
    grad_storage(v.id) += delta;
}

void Tape::accumulate(Var v, std::size_t row, const Eigen::Ref<const Eigen::RowVectorXd>& delta) {
    if (!nodes_[v.id].requires_grad) return;
    grad_storage(v.id).row(static_cast<Eigen::Index>(row)) += delta;
}

void Tape::backward(Var loss) {
    const Matrix& l = value(loss);
    if (l.rows() != 1 || l.cols() != 1) {
        fail(ErrorCode::DimensionMismatch, "backward() needs a scalar loss");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[loss.id].requires_grad) return;
    grad_storage(loss.id)(0, 0) = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, i);
        if (n.sink != nullptr) *n.sink += n.grad;
    }
}

namespace {

bool needs(Tape& t, Var a) { return t.requires_grad(a); }
bool needs(Tape& t, Var a, Var b) { return t.requires_grad(a) || t.requires_grad(b); }

void require_same(const Matrix& a, const Matrix& b, const char* op) {
    require_shape(b, a.rows(), a.cols(), op);
}

// Elementwise unary op given f and f' evaluated on the input.
template <class F, class DF>
Var unary(Tape& t, Var a, F f, DF df) {
    Matrix out = t.value(a).unaryExpr(f);
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, df](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        tp.accumulate(a, g.cwiseProduct(tp.value(a).unaryExpr(df)));
    });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
    require_same(t.value(a), t.value(b), "add");
    Matrix out = t.value(a) + t.value(b);
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(Tape& t, Var a, Var b) {
    require_same(t.value(a), t.value(b), "sub");
    Matrix out = t.value(a) - t.value(b);
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        tp.accumulate(a, g);
        tp.accumulate(b, -g);
    });
}

Var scale(Tape& t, Var a, double c) {
    Matrix out = t.value(a) * c;
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, c](Tape& tp, std::size_t self) {
        tp.accumulate(a, tp.grad(Var{self}) * c);
    });
}

Var hadamard(Tape& t, Var a, Var b) {
    require_same(t.value(a), t.value(b), "hadamard");
    Matrix out = t.value(a).cwiseProduct(t.value(b));
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        tp.accumulate(b, g.cwiseProduct(tp.value(a)));
    });
}

Var matmul(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (av.cols() != bv.rows()) fail(ErrorCode::DimensionMismatch, "matmul: inner dimensions differ");
    Matrix out = av * bv;
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var matmul_nt(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (av.cols() != bv.cols()) fail(ErrorCode::DimensionMismatch, "matmul_nt: widths differ");
    Matrix out = av * bv.transpose();
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
        if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
    });
}

Var spmm(Tape& t, const CsrMatrix& a, const CsrMatrix& a_t, Var x) {
    Matrix out = a.multiply(t.value(x));
    if (!needs(t, x)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [&a_t, x](Tape& tp, std::size_t self) {
        tp.accumulate(x, a_t.multiply(tp.grad(Var{self})));
    });
}

Var exp(Tape& t, Var a) {
    return unary(t, a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Tape& t, Var a) {
    return unary(t, a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var sqrt(Tape& t, Var a) {
    return unary(
        t, a, [](double x) { return std::sqrt(x); }, [](double x) { return 0.5 / std::sqrt(x); });
}

Var elu_plus_one(Tape& t, Var a) {
    return unary(
        t, a, [](double x) { return x >= 0.0 ? x + 1.0 : std::exp(x); },
        [](double x) { return x >= 0.0 ? 1.0 : std::exp(x); });
}

Var softplus(Tape& t, Var a) {
    return unary(
        t, a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x) {
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        });
}

Var reparameterize(Tape& t, Var mu, Var raw_var, const Matrix& noise) {
    const Matrix& m = t.value(mu);
    const Matrix& r = t.value(raw_var);
    require_same(m, r, "reparameterize");
    require_same(m, noise, "reparameterize noise");
    Matrix std_dev = r.unaryExpr([](double x) { return x >= 0.0 ? std::sqrt(x + 1.0) : std::exp(0.5 * x); });
    Matrix out = m + std_dev.cwiseProduct(noise);
    if (!needs(t, mu, raw_var)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [mu, raw_var, noise](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        tp.accumulate(mu, g);
        if (tp.requires_grad(raw_var)) {
            // d sqrt(ELU(x)+1) / dx
            Matrix dstd = tp.value(raw_var).unaryExpr([](double x) {
                return x >= 0.0 ? 0.5 / std::sqrt(x + 1.0) : 0.5 * std::exp(0.5 * x);
            });
            tp.accumulate(raw_var, g.cwiseProduct(noise).cwiseProduct(dstd));
        }
    });
}

Var gather_rows(Tape& t, Var a, const IdList& rows) {
    const Matrix& av = t.value(a);
    Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= av.rows()) fail(ErrorCode::IdOutOfRange, "gather_rows: row out of range");
        out.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
    }
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, rows](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        for (std::size_t i = 0; i < rows.size(); ++i) tp.accumulate(a, rows[i], g.row(static_cast<Eigen::Index>(i)));
    });
}

Var row_dot(Tape& t, Var a, Var b) {
    require_same(t.value(a), t.value(b), "row_dot");
    Matrix out = t.value(a).cwiseProduct(t.value(b)).rowwise().sum();
    if (!needs(t, a, b)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        const Eigen::VectorXd col = g.col(0);
        if (tp.requires_grad(a)) tp.accumulate(a, col.asDiagonal() * tp.value(b));
        if (tp.requires_grad(b)) tp.accumulate(b, col.asDiagonal() * tp.value(a));
    });
}

Var l2_normalize_rows(Tape& t, Var a) {
    static constexpr double kFloor = 1e-12;
    const Matrix& av = t.value(a);
    Eigen::VectorXd norms = av.rowwise().norm();
    Matrix out = av;
    for (Eigen::Index r = 0; r < av.rows(); ++r) out.row(r) /= std::max(norms(r), kFloor);
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, norms](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        const Matrix& y = tp.value(Var{self});
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            if (norms(r) > kFloor) {
                dx.row(r) = (g.row(r) - y.row(r) * y.row(r).dot(g.row(r))) / norms(r);
            } else {
                dx.row(r) = g.row(r) / kFloor;
            }
        }
        tp.accumulate(a, dx);
    });
}

Var log_softmax_rows(Tape& t, Var a) {
    const Matrix& av = t.value(a);
    Matrix out(av.rows(), av.cols());
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
        const double mx = av.row(r).maxCoeff();
        const double lse = mx + std::log((av.row(r).array() - mx).exp().sum());
        out.row(r) = av.row(r).array() - lse;
    }
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        const Matrix& y = tp.value(Var{self});
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            dx.row(r) = g.row(r).array() - y.row(r).array().exp() * g.row(r).sum();
        }
        tp.accumulate(a, dx);
    });
}

Var pick_per_row(Tape& t, Var a, const std::vector<std::size_t>& index) {
    const Matrix& av = t.value(a);
    if (static_cast<Eigen::Index>(index.size()) != av.rows()) {
        fail(ErrorCode::DimensionMismatch, "pick_per_row: one index per row required");
    }
    Matrix out(av.rows(), 1);
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
        if (static_cast<Eigen::Index>(index[r]) >= av.cols()) fail(ErrorCode::IdOutOfRange, "pick_per_row");
        out(r, 0) = av(r, static_cast<Eigen::Index>(index[r]));
    }
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, index](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(Var{self});
        const Matrix& av2 = tp.value(a);
        Matrix dx = Matrix::Zero(av2.rows(), av2.cols());
        for (Eigen::Index r = 0; r < dx.rows(); ++r) dx(r, static_cast<Eigen::Index>(index[r])) = g(r, 0);
        tp.accumulate(a, dx);
    });
}

Var sum(Tape& t, Var a) {
    Matrix out(1, 1);
    out(0, 0) = t.value(a).sum();
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a](Tape& tp, std::size_t self) {
        const Matrix& av = tp.value(a);
        tp.accumulate(a, Matrix::Constant(av.rows(), av.cols(), tp.grad(Var{self})(0, 0)));
    });
}

Var mean(Tape& t, Var a) {
    const auto n = static_cast<double>(t.value(a).size());
    if (n == 0) fail(ErrorCode::EmptyBatch, "mean of an empty matrix");
    return scale(t, sum(t, a), 1.0 / n);
}

Var frobenius_dot(Tape& t, Var a, const Matrix& weights) {
    require_same(t.value(a), weights, "frobenius_dot");
    Matrix out(1, 1);
    out(0, 0) = t.value(a).cwiseProduct(weights).sum();
    if (!needs(t, a)) return t.constant(std::move(out));
    return t.record(std::move(out), true, [a, weights](Tape& tp, std::size_t self) {
        tp.accumulate(a, weights * tp.grad(Var{self})(0, 0));
    });
}

}  // namespace gpcl::ad
