#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "matrix.hpp"

namespace seqdiff {

// Reverse-mode tape over Matrix-valued nodes. Nodes are recorded in forward
// order; backward() replays them strictly in reverse, so creation order is a
// valid topological order. Single-owner, not shared across threads.
class Tape {
public:
    using NodeId = std::size_t;

    NodeId leaf(Matrix value) {
        nodes_.push_back(Node{std::move(value), {}, nullptr});
        return nodes_.size() - 1;
    }

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    const Matrix& grad(NodeId id) const { return nodes_[id].grad; }

    NodeId add(NodeId a, NodeId b) {
        check_same_shape(value(a), value(b), "Tape::add");
        Matrix out = value(a) + value(b);
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            t.accumulate(a, g);
            t.accumulate(b, g);
        });
    }

    NodeId sub(NodeId a, NodeId b) {
        check_same_shape(value(a), value(b), "Tape::sub");
        Matrix out = value(a) - value(b);
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            t.accumulate(a, g);
            t.accumulate(b, -1.0 * g);
        });
    }

    NodeId scale(NodeId a, double s) {
        Matrix out = s * value(a);
        return record(std::move(out), [a, s](Tape& t, const Matrix& g) { t.accumulate(a, s * g); });
    }

    // element-wise product
    NodeId mul(NodeId a, NodeId b) {
        check_same_shape(value(a), value(b), "Tape::mul");
        Matrix out = hadamard(value(a), value(b));
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            t.accumulate(a, hadamard(g, t.value(b)));
            t.accumulate(b, hadamard(g, t.value(a)));
        });
    }

    NodeId matmul_op(NodeId a, NodeId b) {
        Matrix out = matmul(value(a), value(b));
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            t.accumulate(a, matmul(g, t.value(b).transpose()));
            t.accumulate(b, matmul(t.value(a).transpose(), g));
        });
    }

    // A * B^T
    NodeId matmul_nt(NodeId a, NodeId b) {
        Matrix out = matmul(value(a), value(b).transpose());
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            t.accumulate(a, matmul(g, t.value(b)));
            t.accumulate(b, matmul(g.transpose(), t.value(a)));
        });
    }

    // x * W + bias row broadcast over rows of x
    NodeId affine(NodeId x, NodeId w, NodeId bias) {
        const Matrix& bm = value(bias);
        if (bm.rows() != 1) throw std::invalid_argument("Tape::affine: bias must be a row vector");
        Matrix out = matmul(value(x), value(w));
        if (out.cols() != bm.cols()) throw std::invalid_argument("Tape::affine: bias width mismatch");
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bm(0, c);
        return record(std::move(out), [x, w, bias](Tape& t, const Matrix& g) {
            t.accumulate(x, matmul(g, t.value(w).transpose()));
            t.accumulate(w, matmul(t.value(x).transpose(), g));
            Matrix gb(1, g.cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
            t.accumulate(bias, gb);
        });
    }

    NodeId concat_rows(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw std::invalid_argument("Tape::concat_rows: empty");
        const std::size_t cols = value(parts[0]).cols();
        std::size_t rows = 0;
        for (NodeId p : parts) {
            if (value(p).cols() != cols)
                throw std::invalid_argument("Tape::concat_rows: column mismatch");
            rows += value(p).rows();
        }
        Matrix out(rows, cols);
        std::size_t off = 0;
        for (NodeId p : parts) {
            out.set_row_block(off, value(p));
            off += value(p).rows();
        }
        return record(std::move(out), [parts](Tape& t, const Matrix& g) {
            std::size_t off = 0;
            for (NodeId p : parts) {
                const std::size_t n = t.value(p).rows();
                t.accumulate(p, g.row_block(off, off + n));
                off += n;
            }
        });
    }

    NodeId slice_rows(NodeId a, std::size_t begin, std::size_t end) {
        Matrix out = value(a).row_block(begin, end);
        return record(std::move(out), [a, begin](Tape& t, const Matrix& g) {
            Matrix ga(t.value(a).rows(), t.value(a).cols());
            ga.set_row_block(begin, g);
            t.accumulate(a, ga);
        });
    }

    NodeId slice_cols(NodeId a, std::size_t begin, std::size_t end) {
        const Matrix& m = value(a);
        if (begin > end || end > m.cols()) throw std::out_of_range("Tape::slice_cols range");
        Matrix out(m.rows(), end - begin);
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = m(r, c);
        return record(std::move(out), [a, begin](Tape& t, const Matrix& g) {
            Matrix ga(t.value(a).rows(), t.value(a).cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) = g(r, c);
            t.accumulate(a, ga);
        });
    }

    NodeId concat_cols(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw std::invalid_argument("Tape::concat_cols: empty");
        const std::size_t rows = value(parts[0]).rows();
        std::size_t cols = 0;
        for (NodeId p : parts) {
            if (value(p).rows() != rows)
                throw std::invalid_argument("Tape::concat_cols: row mismatch");
            cols += value(p).cols();
        }
        Matrix out(rows, cols);
        std::size_t off = 0;
        for (NodeId p : parts) {
            const Matrix& m = value(p);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < m.cols(); ++c) out(r, off + c) = m(r, c);
            off += m.cols();
        }
        return record(std::move(out), [parts](Tape& t, const Matrix& g) {
            std::size_t off = 0;
            for (NodeId p : parts) {
                const std::size_t pc = t.value(p).cols();
                Matrix gp(g.rows(), pc);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < pc; ++c) gp(r, c) = g(r, off + c);
                t.accumulate(p, gp);
                off += pc;
            }
        });
    }

    NodeId softmax_rows(NodeId a) {
        const Matrix& x = value(a);
        Matrix out(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double mx = x(r, 0);
            for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
            double sum = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                out(r, c) = std::exp(x(r, c) - mx);
                sum += out(r, c);
            }
            for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= sum;
        }
        NodeId id = record(std::move(out), nullptr);
        nodes_[id].backward = [a, id](Tape& t, const Matrix& g) {
            const Matrix& p = t.value(id);
            Matrix ga(p.rows(), p.cols());
            for (std::size_t r = 0; r < p.rows(); ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < p.cols(); ++c) dot += g(r, c) * p(r, c);
                for (std::size_t c = 0; c < p.cols(); ++c)
                    ga(r, c) = p(r, c) * (g(r, c) - dot);
            }
            t.accumulate(a, ga);
        };
        return id;
    }

    // y = gamma * (x - mean) / sqrt(var + eps), per row; gamma is a row vector.
    NodeId layer_norm_rows(NodeId x, NodeId gamma, double eps = 1e-6) {
        const Matrix& xm = value(x);
        const Matrix& gm = value(gamma);
        if (gm.rows() != 1 || gm.cols() != xm.cols())
            throw std::invalid_argument("Tape::layer_norm_rows: gamma shape");
        const std::size_t n = xm.cols();
        Matrix out(xm.rows(), n);
        std::vector<double> inv_std(xm.rows());
        Matrix xhat(xm.rows(), n);
        for (std::size_t r = 0; r < xm.rows(); ++r) {
            double mean = 0.0;
            for (std::size_t c = 0; c < n; ++c) mean += xm(r, c);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                const double d = xm(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double is = 1.0 / std::sqrt(var + eps);
            inv_std[r] = is;
            for (std::size_t c = 0; c < n; ++c) {
                xhat(r, c) = (xm(r, c) - mean) * is;
                out(r, c) = gm(0, c) * xhat(r, c);
            }
        }
        return record(std::move(out),
                      [x, gamma, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                          Tape& t, const Matrix& g) {
            const Matrix& gm = t.value(gamma);
            const std::size_t n = xhat.cols();
            Matrix gx(xhat.rows(), n);
            Matrix gg(1, n);
            for (std::size_t r = 0; r < xhat.rows(); ++r) {
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double gy = g(r, c) * gm(0, c);
                    sum_gy += gy;
                    sum_gy_xhat += gy * xhat(r, c);
                    gg(0, c) += g(r, c) * xhat(r, c);
                }
                const double inv_n = 1.0 / static_cast<double>(n);
                for (std::size_t c = 0; c < n; ++c) {
                    const double gy = g(r, c) * gm(0, c);
                    gx(r, c) = inv_std[r] *
                               (gy - inv_n * sum_gy - xhat(r, c) * inv_n * sum_gy_xhat);
                }
            }
            t.accumulate(x, gx);
            t.accumulate(gamma, gg);
        });
    }

    // GELU, exact erf form.
    NodeId gelu(NodeId a) {
        const Matrix& x = value(a);
        Matrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x.at(i);
            out.at(i) = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
        }
        return record(std::move(out), [a](Tape& t, const Matrix& g) {
            const Matrix& x = t.value(a);
            Matrix ga(x.rows(), x.cols());
            constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double v = x.at(i);
                const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
                const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
                ga.at(i) = g.at(i) * (cdf + v * pdf);
            }
            t.accumulate(a, ga);
        });
    }

    // mean((a - b)^2) as a 1x1 node
    NodeId mse(NodeId a, NodeId b) {
        check_same_shape(value(a), value(b), "Tape::mse");
        const Matrix& am = value(a);
        const Matrix& bm = value(b);
        double s = 0.0;
        for (std::size_t i = 0; i < am.size(); ++i) {
            const double d = am.at(i) - bm.at(i);
            s += d * d;
        }
        Matrix out(1, 1);
        out(0, 0) = s / static_cast<double>(am.size());
        return record(std::move(out), [a, b](Tape& t, const Matrix& g) {
            const Matrix& am = t.value(a);
            const Matrix& bm = t.value(b);
            const double coeff = 2.0 * g(0, 0) / static_cast<double>(am.size());
            Matrix ga(am.rows(), am.cols());
            for (std::size_t i = 0; i < am.size(); ++i)
                ga.at(i) = coeff * (am.at(i) - bm.at(i));
            t.accumulate(a, ga);
            t.accumulate(b, -1.0 * ga);
        });
    }

    // Seeds the loss gradient with 1 and runs the reverse pass. Loss must be scalar.
    void backward(NodeId loss) {
        const Matrix& lv = value(loss);
        if (lv.rows() != 1 || lv.cols() != 1)
            throw std::invalid_argument("Tape::backward: loss node is not scalar");
        for (auto& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
        nodes_[loss].grad(0, 0) = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].backward && frobenius_norm(nodes_[i].grad) != 0.0)
                nodes_[i].backward(*this, nodes_[i].grad);
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Matrix&)> backward;
    };

    NodeId record(Matrix value, std::function<void(Tape&, const Matrix&)> backward) {
        nodes_.push_back(Node{std::move(value), {}, std::move(backward)});
        return nodes_.size() - 1;
    }

    void accumulate(NodeId id, const Matrix& g) {
        Matrix& dst = nodes_[id].grad;
        if (dst.size() == 0) dst = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
        for (std::size_t i = 0; i < dst.size(); ++i) dst.at(i) += g.at(i);
    }

    std::vector<Node> nodes_;
};

}  // namespace seqdiff
