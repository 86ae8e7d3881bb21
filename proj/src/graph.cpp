#include "scgan/graph.hpp"

#include <cmath>
#include <string>

#include "scgan/errors.hpp"

namespace scgan {

namespace {

void require(bool cond, const char* op, const std::string& detail) {
    if (!cond) throw UsageError(std::string(op) + ": " + detail);
}

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Graph::Id Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Graph::Node& Graph::node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
const Graph::Node& Graph::node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }

const Matrix& Graph::value(Id id) const { return node(id).val; }

Graph::Id Graph::input(Matrix value) {
    Node n;
    n.op = Op::input;
    n.val = std::move(value);
    return push(std::move(n));
}

Graph::Id Graph::param(ParamStore& store, const std::string& name) {
    const std::size_t idx = store.index_of(name);
    const ParamEntry& e = store.entry(idx);
    Node n;
    n.op = Op::param;
    n.store = &store;
    n.entry = idx;
    n.val = Matrix(e.rows, e.cols);
    std::copy(e.values.begin(), e.values.end(), n.val.data());
    return push(std::move(n));
}

Graph::Id Graph::matmul(Id a, Id b) {
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.val = scgan::matmul(node(a).val, node(b).val);
    return push(std::move(n));
}

Graph::Id Graph::matmul_nt(Id a, Id b) {
    Node n;
    n.op = Op::matmul_nt;
    n.a = a;
    n.b = b;
    n.val = scgan::matmul_nt(node(a).val, node(b).val);
    return push(std::move(n));
}

Graph::Id Graph::add(Id a, Id b) {
    const Matrix& x = node(a).val;
    const Matrix& y = node(b).val;
    require(x.same_shape(y), "add", "shape mismatch " + shape_str(x) + " vs " + shape_str(y));
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.val = x;
    double* p = n.val.data();
    const double* q = y.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] += q[i];
    return push(std::move(n));
}

Graph::Id Graph::sub(Id a, Id b) {
    const Matrix& x = node(a).val;
    const Matrix& y = node(b).val;
    require(x.same_shape(y), "sub", "shape mismatch " + shape_str(x) + " vs " + shape_str(y));
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.val = x;
    double* p = n.val.data();
    const double* q = y.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] -= q[i];
    return push(std::move(n));
}

Graph::Id Graph::mul(Id a, Id b) {
    const Matrix& x = node(a).val;
    const Matrix& y = node(b).val;
    require(x.same_shape(y), "mul", "shape mismatch " + shape_str(x) + " vs " + shape_str(y));
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.val = x;
    double* p = n.val.data();
    const double* q = y.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] *= q[i];
    return push(std::move(n));
}

Graph::Id Graph::scale(Id a, double c) {
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.c = c;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] *= c;
    return push(std::move(n));
}

Graph::Id Graph::add_rowvec(Id a, Id rowvec) {
    const Matrix& x = node(a).val;
    const Matrix& r = node(rowvec).val;
    require(r.rows() == 1 && r.cols() == x.cols(), "add_rowvec",
            "expected [1," + std::to_string(x.cols()) + "], got " + shape_str(r));
    Node n;
    n.op = Op::add_rowvec;
    n.a = a;
    n.b = rowvec;
    n.val = x;
    const double* rv = r.data();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double* prow = n.val.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) prow[j] += rv[j];
    }
    return push(std::move(n));
}

Graph::Id Graph::relu(Id a) {
    Node n;
    n.op = Op::relu;
    n.a = a;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
    return push(std::move(n));
}

Graph::Id Graph::leaky_relu(Id a, double slope) {
    Node n;
    n.op = Op::leaky_relu;
    n.a = a;
    n.c = slope;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i)
        if (p[i] < 0.0) p[i] *= slope;
    return push(std::move(n));
}

Graph::Id Graph::tanh_act(Id a) {
    Node n;
    n.op = Op::tanh_act;
    n.a = a;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] = std::tanh(p[i]);
    return push(std::move(n));
}

Graph::Id Graph::exp_elem(Id a) {
    Node n;
    n.op = Op::exp_elem;
    n.a = a;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] = std::exp(p[i]);
    return push(std::move(n));
}

Graph::Id Graph::log_elem(Id a) {
    Node n;
    n.op = Op::log_elem;
    n.a = a;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] = std::log(p[i]);
    return push(std::move(n));
}

Graph::Id Graph::softplus(Id a) {
    Node n;
    n.op = Op::softplus;
    n.a = a;
    n.val = node(a).val;
    double* p = n.val.data();
    for (std::size_t i = 0; i < n.val.size(); ++i) p[i] = stable_softplus(p[i]);
    return push(std::move(n));
}

Graph::Id Graph::row_l2_normalize(Id a) {
    Node n;
    n.op = Op::row_l2_normalize;
    n.a = a;
    n.val = node(a).val;
    for (std::size_t i = 0; i < n.val.rows(); ++i) {
        double* prow = n.val.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < n.val.cols(); ++j) s += prow[j] * prow[j];
        const double norm = std::sqrt(s);
        if (norm == 0.0)
            throw NumericError("row_l2_normalize: zero-norm row " + std::to_string(i));
        for (std::size_t j = 0; j < n.val.cols(); ++j) prow[j] /= norm;
    }
    return push(std::move(n));
}

Graph::Id Graph::row_sum(Id a) {
    const Matrix& x = node(a).val;
    Node n;
    n.op = Op::row_sum;
    n.a = a;
    n.val = Matrix(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* prow = x.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) s += prow[j];
        n.val(i, 0) = s;
    }
    return push(std::move(n));
}

Graph::Id Graph::sum_all(Id a) {
    const Matrix& x = node(a).val;
    Node n;
    n.op = Op::sum_all;
    n.a = a;
    n.val = Matrix(1, 1);
    double s = 0.0;
    const double* p = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += p[i];
    n.val(0, 0) = s;
    return push(std::move(n));
}

Graph::Id Graph::mean_all(Id a) {
    const Matrix& x = node(a).val;
    require(x.size() > 0, "mean_all", "empty operand");
    Node n;
    n.op = Op::mean_all;
    n.a = a;
    n.val = Matrix(1, 1);
    double s = 0.0;
    const double* p = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += p[i];
    n.val(0, 0) = s / static_cast<double>(x.size());
    return push(std::move(n));
}

void Graph::backward(Id loss) {
    require(loss >= 0 && loss < static_cast<Id>(nodes_.size()), "backward", "invalid node id");
    Node& ln = node(loss);
    require(ln.val.rows() == 1 && ln.val.cols() == 1, "backward",
            "loss must be 1x1, got " + shape_str(ln.val));

    // Nodes are appended in topological order, so a reverse sweep from the
    // loss id visits children before parents.
    for (Id i = 0; i <= loss; ++i) {
        Node& n = node(i);
        n.grad = Matrix(n.val.rows(), n.val.cols());
    }
    ln.grad(0, 0) = 1.0;

    for (Id i = loss; i >= 0; --i) {
        const Node& n = node(i);
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::input:
            case Op::param:
                break;
            case Op::matmul: {
                // y = a b: da += g b^T, db += a^T g
                const Matrix da = scgan::matmul_nt(g, node(n.b).val);
                const Matrix db = scgan::matmul_tn(node(n.a).val, g);
                Matrix& ga = node(n.a).grad;
                for (std::size_t k = 0; k < ga.size(); ++k) ga.data()[k] += da.data()[k];
                Matrix& gb = node(n.b).grad;
                for (std::size_t k = 0; k < gb.size(); ++k) gb.data()[k] += db.data()[k];
                break;
            }
            case Op::matmul_nt: {
                // y = a b^T: da += g b, db += g^T a
                const Matrix da = scgan::matmul(g, node(n.b).val);
                const Matrix db = scgan::matmul_tn(g, node(n.a).val);
                Matrix& ga = node(n.a).grad;
                for (std::size_t k = 0; k < ga.size(); ++k) ga.data()[k] += da.data()[k];
                Matrix& gb = node(n.b).grad;
                for (std::size_t k = 0; k < gb.size(); ++k) gb.data()[k] += db.data()[k];
                break;
            }
            case Op::add: {
                Matrix& ga = node(n.a).grad;
                Matrix& gb = node(n.b).grad;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    ga.data()[k] += g.data()[k];
                    gb.data()[k] += g.data()[k];
                }
                break;
            }
            case Op::sub: {
                Matrix& ga = node(n.a).grad;
                Matrix& gb = node(n.b).grad;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    ga.data()[k] += g.data()[k];
                    gb.data()[k] -= g.data()[k];
                }
                break;
            }
            case Op::mul: {
                Matrix& ga = node(n.a).grad;
                Matrix& gb = node(n.b).grad;
                const double* av = node(n.a).val.data();
                const double* bv = node(n.b).val.data();
                for (std::size_t k = 0; k < g.size(); ++k) {
                    ga.data()[k] += g.data()[k] * bv[k];
                    gb.data()[k] += g.data()[k] * av[k];
                }
                break;
            }
            case Op::scale: {
                Matrix& ga = node(n.a).grad;
                for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += n.c * g.data()[k];
                break;
            }
            case Op::add_rowvec: {
                Matrix& ga = node(n.a).grad;
                for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k];
                Matrix& gr = node(n.b).grad;
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    const double* grow = g.row(r);
                    for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += grow[c];
                }
                break;
            }
            case Op::relu: {
                Matrix& ga = node(n.a).grad;
                const double* xv = node(n.a).val.data();
                for (std::size_t k = 0; k < g.size(); ++k)
                    if (xv[k] > 0.0) ga.data()[k] += g.data()[k];
                break;
            }
            case Op::leaky_relu: {
                Matrix& ga = node(n.a).grad;
                const double* xv = node(n.a).val.data();
                for (std::size_t k = 0; k < g.size(); ++k)
                    ga.data()[k] += g.data()[k] * (xv[k] > 0.0 ? 1.0 : n.c);
                break;
            }
            case Op::tanh_act: {
                Matrix& ga = node(n.a).grad;
                const double* yv = n.val.data();
                for (std::size_t k = 0; k < g.size(); ++k)
                    ga.data()[k] += g.data()[k] * (1.0 - yv[k] * yv[k]);
                break;
            }
            case Op::exp_elem: {
                Matrix& ga = node(n.a).grad;
                const double* yv = n.val.data();
                for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k] * yv[k];
                break;
            }
            case Op::log_elem: {
                Matrix& ga = node(n.a).grad;
                const double* xv = node(n.a).val.data();
                for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k] / xv[k];
                break;
            }
            case Op::softplus: {
                Matrix& ga = node(n.a).grad;
                const double* xv = node(n.a).val.data();
                for (std::size_t k = 0; k < g.size(); ++k)
                    ga.data()[k] += g.data()[k] * sigmoid(xv[k]);
                break;
            }
            case Op::row_l2_normalize: {
                // y = x / |x|: dx = (g - y (y . g)) / |x|
                Matrix& ga = node(n.a).grad;
                const Matrix& x = node(n.a).val;
                const Matrix& y = n.val;
                for (std::size_t r = 0; r < x.rows(); ++r) {
                    const double* xr = x.row(r);
                    const double* yr = y.row(r);
                    const double* gr = g.row(r);
                    double norm2 = 0.0, dot = 0.0;
                    for (std::size_t c = 0; c < x.cols(); ++c) {
                        norm2 += xr[c] * xr[c];
                        dot += yr[c] * gr[c];
                    }
                    const double norm = std::sqrt(norm2);
                    double* gar = ga.row(r);
                    for (std::size_t c = 0; c < x.cols(); ++c)
                        gar[c] += (gr[c] - yr[c] * dot) / norm;
                }
                break;
            }
            case Op::row_sum: {
                Matrix& ga = node(n.a).grad;
                for (std::size_t r = 0; r < ga.rows(); ++r) {
                    const double gv = g(r, 0);
                    double* gar = ga.row(r);
                    for (std::size_t c = 0; c < ga.cols(); ++c) gar[c] += gv;
                }
                break;
            }
            case Op::sum_all: {
                Matrix& ga = node(n.a).grad;
                const double gv = g(0, 0);
                for (std::size_t k = 0; k < ga.size(); ++k) ga.data()[k] += gv;
                break;
            }
            case Op::mean_all: {
                Matrix& ga = node(n.a).grad;
                const double gv = g(0, 0) / static_cast<double>(ga.size());
                for (std::size_t k = 0; k < ga.size(); ++k) ga.data()[k] += gv;
                break;
            }
        }
    }

    for (Id i = 0; i <= loss; ++i) {
        Node& n = node(i);
        if (n.op != Op::param) continue;
        ParamEntry& e = n.store->entry(n.entry);
        const double* gp = n.grad.data();
        for (std::size_t k = 0; k < e.grad.size(); ++k) e.grad[k] += gp[k];
    }
}

}  // namespace scgan
