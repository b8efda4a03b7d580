// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gldnet/tensor.h"

namespace gldnet {

// Tape of differentiable operations recorded while a Graph is active on the
// current thread. Entries are appended in execution order, so every input id
// precedes its consumer; backward() walks them once, in reverse.
//
//   Graph<double> graph;
//   {
//     auto scope = graph.activate();
//     loss = sum(mul(x, x));
//   }
//   graph.backward(loss);
template <typename T>
class Graph {
 public:
  using ImplPtr = std::shared_ptr<TensorImpl<T>>;

  struct Entry {
    std::string op;
    std::vector<std::uint64_t> inputs;
    std::uint64_t output = 0;
    ImplPtr output_impl;
    std::function<void()> backward;
  };

  class Scope {
   public:
    explicit Scope(Graph* graph);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* previous_;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  [[nodiscard]] Scope activate() { return Scope(this); }
  static Graph* active();

  void record(std::string op, const std::vector<ImplPtr>& inputs, const ImplPtr& output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward closure in
  // reverse order. Gradients accumulate into existing buffers.
  void backward(const Tensor<T>& loss);

  // Describes the first recorded output holding a NaN/Inf, if any.
  std::optional<std::string> first_non_finite() const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  void clear();

 private:
  std::uint64_t id_of(const ImplPtr& impl);

  std::vector<Entry> entries_;
  std::unordered_map<const TensorImpl<T>*, std::uint64_t> ids_;
  std::uint64_t next_id_ = 1;
};

// Records `backward` for `output` when a graph is active and any input needs
// gradients; marks `output` as requiring gradients in that case.
template <typename T>
void record_op(const char* op, const std::vector<std::shared_ptr<TensorImpl<T>>>& inputs,
               Tensor<T>& output, std::function<void()> backward);

// True if an active graph exists and at least one input requires grad.
template <typename T>
bool needs_grad(std::initializer_list<const Tensor<T>*> inputs);

// Grad buffer of `impl`, allocated on first use.
template <typename T>
std::vector<T>& grad_buffer(TensorImpl<T>& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), T(0));
  return impl.grad;
}

}  // namespace gldnet
