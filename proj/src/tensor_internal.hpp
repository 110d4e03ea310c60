#pragma once

// Internal op-construction helpers shared by the tensor translation units.

#include "tavp/tensor.hpp"

namespace tavp::detail {

std::shared_ptr<Node> new_node(Shape shape, const char* op);
void finalize(Node& node, const char* op);
void attach(const std::shared_ptr<Node>& out, std::vector<std::shared_ptr<Node>> parents,
            std::function<void(Node&)> backward_fn);
std::vector<int64_t> strides_of(const Shape& shape);

} // namespace tavp::detail
