#include "annomesh/mesh/tuple.hpp"

#include <numeric>
#include <stdexcept>

namespace annomesh::mesh {

bool within(const TupleValue& value, float x, float y, float r) {
    const float dx = value.center.x() - x;
    const float dy = value.center.y() - y;
    const float reach = r + kLocationEpsilon;
    return dx * dx + dy * dy <= reach * reach;
}

NodeId node_id(std::size_t available, std::size_t neighbor_count) {
    if (neighbor_count == 0) return 1;
    return static_cast<NodeId>(available * neighbor_count);
}

UncertaintyHash::UncertaintyHash(const ensemble::ClassModel& model, TupleHash step) : step_(step) {
    model.validate();
    if (step < 1) throw std::invalid_argument("UncertaintyHash: step must be at least 1");
    const int c = model.class_count();
    std::vector<int> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return model.accuracy[static_cast<std::size_t>(a)] > model.accuracy[static_cast<std::size_t>(b)];
    });
    bucket_.resize(static_cast<std::size_t>(c));
    for (int rank = 0; rank < c; ++rank)
        bucket_[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] =
            static_cast<TupleHash>(step * (1 + rank));
}

TupleHash UncertaintyHash::operator()(ClassId annotation, bool consolidated) const {
    if (annotation >= bucket_.size()) throw std::out_of_range("UncertaintyHash: unknown class");
    return consolidated ? 0 : bucket_[annotation];
}

TupleHash UncertaintyHash::max_bucket() const { return static_cast<TupleHash>(step_ * bucket_.size()); }

}  // namespace annomesh::mesh
