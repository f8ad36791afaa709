#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace balasso {

// Column indices per group. Groups must partition 0..p-1.
using GroupMap = std::vector<std::vector<Eigen::Index>>;

// Directed pairs (ancestor, descendant): the descendant group may only enter
// a model that already contains the ancestor.
using AncestryRelation = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

GroupMap singleton_groups(Eigen::Index p);

// Throws ParameterDomainError unless `groups` partitions 0..p-1.
void validate_partition(const GroupMap& groups, Eigen::Index p);

// Throws ParameterDomainError on out-of-range indices, self loops or cycles.
void validate_ancestry(const AncestryRelation& relation, Eigen::Index n_groups);

}  // namespace balasso
