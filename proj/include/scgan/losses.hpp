#pragma once

#include "scgan/graph.hpp"

namespace scgan {

// Mean over rows of the squared Euclidean distance between paired rows.
Graph::Id mse_loss(Graph& g, Graph::Id a, Graph::Id b);

// Binary cross entropy from logits, numerically stable via softplus.
// bce_real targets 1 (mean softplus(-logit)), bce_fake targets 0
// (mean softplus(logit)).
Graph::Id bce_real(Graph& g, Graph::Id logits);
Graph::Id bce_fake(Graph& g, Graph::Id logits);

// Non-saturating generator objective on fake logits: mean softplus(-logit).
Graph::Id nonsaturating_loss(Graph& g, Graph::Id fake_logits);

double sigmoid_scalar(double x);

}  // namespace scgan
