// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/graph.h"

#include <cmath>
#include <sstream>

namespace gldnet {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

template <typename T>
Graph<T>*& active_slot() {
  thread_local Graph<T>* slot = nullptr;
  return slot;
}

}  // namespace

template <typename T>
Graph<T>::Scope::Scope(Graph* graph) : previous_(active_slot<T>()) {
  active_slot<T>() = graph;
}

template <typename T>
Graph<T>::Scope::~Scope() {
  active_slot<T>() = previous_;
}

template <typename T>
Graph<T>* Graph<T>::active() {
  return active_slot<T>();
}

template <typename T>
std::uint64_t Graph<T>::id_of(const ImplPtr& impl) {
  auto [it, inserted] = ids_.try_emplace(impl.get(), next_id_);
  if (inserted) {
    impl->node_id = next_id_++;
  }
  return it->second;
}

template <typename T>
void Graph<T>::record(std::string op, const std::vector<ImplPtr>& inputs, const ImplPtr& output,
                      std::function<void()> backward) {
  Entry entry;
  entry.op = std::move(op);
  entry.inputs.reserve(inputs.size());
  for (const auto& in : inputs) entry.inputs.push_back(id_of(in));
  entry.output = id_of(output);
  entry.output_impl = output;
  entry.backward = std::move(backward);
  entries_.push_back(std::move(entry));
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;
  auto& seed = grad_buffer(*loss.impl());
  seed[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output_impl->grad.empty()) continue;
    it->backward();
  }
}

template <typename T>
std::optional<std::string> Graph<T>::first_non_finite() const {
  for (const auto& e : entries_) {
    for (T v : e.output_impl->data) {
      if (!std::isfinite(v)) {
        return "node " + std::to_string(e.output) + " (" + e.op + ", shape " +
               to_string(e.output_impl->shape) + ")";
      }
    }
  }
  return std::nullopt;
}

template <typename T>
void Graph<T>::clear() {
  entries_.clear();
  ids_.clear();
  next_id_ = 1;
}

template <typename T>
bool needs_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (Graph<T>::active() == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void record_op(const char* op, const std::vector<std::shared_ptr<TensorImpl<T>>>& inputs,
               Tensor<T>& output, std::function<void()> backward) {
  Graph<T>* graph = Graph<T>::active();
  if (graph == nullptr) return;
  output.set_requires_grad(true);
  graph->record(op, inputs, output.impl(), std::move(backward));
}

template class Graph<float>;
template class Graph<double>;
template bool needs_grad<float>(std::initializer_list<const Tensor<float>*>);
template bool needs_grad<double>(std::initializer_list<const Tensor<double>*>);
template void record_op<float>(const char*, const std::vector<std::shared_ptr<TensorImpl<float>>>&,
                               Tensor<float>&, std::function<void()>);
template void record_op<double>(const char*,
                                const std::vector<std::shared_ptr<TensorImpl<double>>>&,
                                Tensor<double>&, std::function<void()>);

}  // namespace gldnet
