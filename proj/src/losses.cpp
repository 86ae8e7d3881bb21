#include "scgan/losses.hpp"

#include <cmath>

#include "scgan/errors.hpp"

namespace scgan {

Graph::Id mse_loss(Graph& g, Graph::Id a, Graph::Id b) {
    const Matrix& av = g.value(a);
    const Matrix& bv = g.value(b);
    if (!av.same_shape(bv)) throw UsageError("mse_loss: operand shapes differ");
    if (av.rows() == 0) throw UsageError("mse_loss: empty operands");
    const Graph::Id d = g.sub(a, b);
    const Graph::Id sq = g.mul(d, d);
    return g.scale(g.sum_all(sq), 1.0 / static_cast<double>(av.rows()));
}

Graph::Id bce_real(Graph& g, Graph::Id logits) {
    return g.mean_all(g.softplus(g.scale(logits, -1.0)));
}

Graph::Id bce_fake(Graph& g, Graph::Id logits) {
    return g.mean_all(g.softplus(logits));
}

Graph::Id nonsaturating_loss(Graph& g, Graph::Id fake_logits) {
    return g.mean_all(g.softplus(g.scale(fake_logits, -1.0)));
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace scgan
