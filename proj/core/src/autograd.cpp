#include <memory>
#include <unordered_set>
#include <vector>

#include "dnas/tensor.hpp"

namespace dnas {

void Tensor::backward() {
  check_input(defined(), "backward on undefined tensor");
  check_input(numel() == 1, "backward requires a scalar loss, got " + shape_str(shape()));
  check_input(impl_->grad_fn != nullptr, "loss has no recorded graph (constant or already released)");
  check_input(!impl_->grad_fn->consumed,
              "backward was already run on this graph; run a fresh forward first");

  // Iterative post-order DFS over producer nodes; reversed post-order is
  // a valid reverse-topological order of the DAG. Strong refs keep the
  // graph alive for the whole sweep.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    std::shared_ptr<Node> node;
    size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({impl_->grad_fn, 0});
  visited.insert(impl_->grad_fn.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->inputs.size()) {
      const std::shared_ptr<Node>& child = f.node->inputs[f.next_child++]->grad_fn;
      if (child && !visited.count(child.get())) {
        check_input(!child->consumed,
                    "graph reaches a node already consumed by a previous backward");
        visited.insert(child.get());
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  impl_->grad.assign(1, 1.0f);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = it->get();
    auto out = node->output.lock();
    check_internal(out != nullptr, "graph output expired before backward");
    if (!out->grad.empty()) {
      node->backward_fn(out->grad);
    }
    node->consumed = true;
  }
  // Release saved intermediates and detach the graph.
  for (auto& node : order) {
    node->backward_fn = nullptr;
    node->inputs.clear();
  }
}

}  // namespace dnas
