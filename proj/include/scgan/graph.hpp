#pragma once

#include <string>
#include <vector>

#include "scgan/matrix.hpp"
#include "scgan/params.hpp"

namespace scgan {

// Reverse-mode tape over matrix operations. A Graph records one forward
// computation; backward() on a scalar node accumulates d(loss)/d(param) into
// the gradient slots of every ParamStore referenced by a param leaf.
//
// Typical use is one Graph per training step: build the loss, call backward
// once, run the optimizer, zero the store gradients. Repeated backward calls
// accumulate, which is what multi-loss steps rely on.
class Graph {
public:
    using Id = int;

    Id input(Matrix value);                                  // constant leaf
    Id param(ParamStore& store, const std::string& name);    // trainable leaf

    Id matmul(Id a, Id b);     // [n,k] x [k,m]
    Id matmul_nt(Id a, Id b);  // a * b^T
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);  // elementwise
    Id scale(Id a, double c);
    Id add_rowvec(Id a, Id rowvec);  // rowvec [1,m] broadcast over rows
    Id relu(Id a);
    Id leaky_relu(Id a, double slope);
    Id tanh_act(Id a);
    Id exp_elem(Id a);
    Id log_elem(Id a);
    Id softplus(Id a);
    Id row_l2_normalize(Id a);  // throws NumericError on a zero-norm row
    Id row_sum(Id a);           // [n,m] -> [n,1]
    Id sum_all(Id a);           // -> [1,1]
    Id mean_all(Id a);          // -> [1,1]

    const Matrix& value(Id id) const;
    std::size_t node_count() const { return nodes_.size(); }

    // loss must be a finite 1x1 node.
    void backward(Id loss);

private:
    enum class Op : unsigned char {
        input, param, matmul, matmul_nt, add, sub, mul, scale, add_rowvec,
        relu, leaky_relu, tanh_act, exp_elem, log_elem, softplus,
        row_l2_normalize, row_sum, sum_all, mean_all,
    };

    struct Node {
        Op op;
        Id a = -1;
        Id b = -1;
        double c = 0.0;  // scale factor or leaky slope
        Matrix val;
        Matrix grad;
        ParamStore* store = nullptr;  // param leaves only
        std::size_t entry = 0;
    };

    Id push(Node n);
    Node& node(Id id);
    const Node& node(Id id) const;

    std::vector<Node> nodes_;
};

}  // namespace scgan
