#include "balasso/groups.hpp"

#include <string>

#include "balasso/error.hpp"

namespace balasso {

GroupMap singleton_groups(Eigen::Index p) {
  GroupMap groups(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) groups[static_cast<std::size_t>(j)] = {j};
  return groups;
}

void validate_partition(const GroupMap& groups, Eigen::Index p) {
  std::vector<int> seen(static_cast<std::size_t>(p), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ParameterDomainError("group " + std::to_string(g) + " is empty");
    for (Eigen::Index col : groups[g]) {
      if (col < 0 || col >= p)
        throw ParameterDomainError("group " + std::to_string(g) + " references column " + std::to_string(col) +
                                   " outside 0.." + std::to_string(p - 1));
      if (seen[static_cast<std::size_t>(col)]++)
        throw ParameterDomainError("column " + std::to_string(col) + " belongs to more than one group");
    }
  }
  for (Eigen::Index col = 0; col < p; ++col)
    if (!seen[static_cast<std::size_t>(col)])
      throw ParameterDomainError("column " + std::to_string(col) + " is not assigned to any group");
}

void validate_ancestry(const AncestryRelation& relation, Eigen::Index n_groups) {
  std::vector<std::vector<Eigen::Index>> children(static_cast<std::size_t>(n_groups));
  for (const auto& [from, to] : relation) {
    if (from < 0 || from >= n_groups || to < 0 || to >= n_groups)
      throw ParameterDomainError("ancestry relation references a group outside 0.." + std::to_string(n_groups - 1));
    if (from == to) throw ParameterDomainError("ancestry relation has a self loop at group " + std::to_string(from));
    children[static_cast<std::size_t>(from)].push_back(to);
  }
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> state(static_cast<std::size_t>(n_groups), 0);
  auto visit = [&](auto&& self, Eigen::Index node) -> void {
    state[static_cast<std::size_t>(node)] = 1;
    for (Eigen::Index next : children[static_cast<std::size_t>(node)]) {
      const int s = state[static_cast<std::size_t>(next)];
      if (s == 1) throw ParameterDomainError("ancestry relation contains a cycle through group " + std::to_string(next));
      if (s == 0) self(self, next);
    }
    state[static_cast<std::size_t>(node)] = 2;
  };
  for (Eigen::Index g = 0; g < n_groups; ++g)
    if (state[static_cast<std::size_t>(g)] == 0) visit(visit, g);
}

}  // namespace balasso
