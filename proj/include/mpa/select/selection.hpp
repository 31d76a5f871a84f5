#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpa/embed/embedding.hpp"

namespace mpa::select {

/// Immutable, dataset-ordered embedding table. Dataset order defines every
/// tie-break in this module.
struct EmbeddingSet {
  std::vector<embed::Embedding> items;

  size_t size() const { return items.size(); }
  const embed::Embedding& operator[](size_t i) const { return items[i]; }
  int index_of(const std::string& id) const;
};

/// Support-set construction outcome: the chosen support ids, the
/// query-to-support assignment, and the summed within-cluster cosine
/// distance.
struct SelectionResult {
  std::vector<std::string> support_ids;
  std::map<std::string, std::string> assignment;  // query id -> support id
  std::map<std::string, double> distance;         // sample id -> dist to its medoid
  double objective = 0.0;
};

/// 1 - cosine similarity, in [0,2]. Throws on zero-norm input or dimension
/// mismatch.
double cosine_distance(const std::vector<float>& a, const std::vector<float>& b);

/// Inverse mean cosine distance from sample i to all others. Returns
/// +infinity when every other sample is identical to i.
double similarity_score(const EmbeddingSet& all, size_t i);

/// Index of the sample with maximal similarity score; ties resolve to the
/// lowest dataset index. Requires at least two samples.
size_t select_s1(const EmbeddingSet& all);

/// Greedy max-min coverage: the first center is seed_index, each next center
/// maximizes the cosine distance to its nearest chosen center.
std::vector<size_t> k_center_greedy(const EmbeddingSet& all, size_t k,
                                    size_t seed_index);

/// PAM-style clustering whose centers are dataset members: alternates
/// nearest-medoid assignment with a best-member medoid swap per cluster until
/// the medoid set is stable (at most 100 sweeps). The objective never
/// increases between sweeps.
SelectionResult k_medoids(const EmbeddingSet& all,
                          const std::vector<size_t>& init);

/// Full selection stage: s1 seed, k-center-greedy init, k-medoids refine.
SelectionResult select_support(const EmbeddingSet& all, size_t k);

/// Baseline without example selection: the first k dataset entries become the
/// support set and each remaining sample is assigned to its nearest support.
SelectionResult select_first_k(const EmbeddingSet& all, size_t k);

/// Manifest serialization (JSON): one record per sample with id, role,
/// assigned support and cluster distance. Byte-stable across write/read/write.
void save_selection(const SelectionResult& result, const EmbeddingSet& all,
                    const std::string& path);
SelectionResult load_selection(const std::string& path);

}  // namespace mpa::select
