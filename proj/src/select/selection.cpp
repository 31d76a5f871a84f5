#include "mpa/select/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace mpa::select {

namespace {

// Pairwise cosine distance matrix in dataset order.
std::vector<double> distance_matrix(const EmbeddingSet& all) {
  const size_t n = all.size();
  std::vector<double> d(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dij = cosine_distance(all[i].vector, all[j].vector);
      d[i * n + j] = dij;
      d[j * n + i] = dij;
    }
  }
  return d;
}

}  // namespace

int EmbeddingSet::index_of(const std::string& id) const {
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].sample_id == id) return static_cast<int>(i);
  return -1;
}

double cosine_distance(const std::vector<float>& a,
                       const std::vector<float>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_distance: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument("cosine_distance: zero-norm vector");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(1.0 - c, 0.0, 2.0);
}

double similarity_score(const EmbeddingSet& all, size_t i) {
  const size_t n = all.size();
  if (n < 2) throw std::invalid_argument("similarity_score: need N >= 2");
  double sum = 0.0;
  for (size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    sum += cosine_distance(all[i].vector, all[j].vector);
  }
  double mean = sum / static_cast<double>(n - 1);
  if (mean <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / mean;
}

size_t select_s1(const EmbeddingSet& all) {
  const size_t n = all.size();
  if (n < 2) throw std::invalid_argument("select_s1: need N >= 2");
  size_t best = 0;
  double best_score = -1.0;
  for (size_t i = 0; i < n; ++i) {
    double s = similarity_score(all, i);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

std::vector<size_t> k_center_greedy(const EmbeddingSet& all, size_t k,
                                    size_t seed_index) {
  const size_t n = all.size();
  if (k < 1 || k > n)
    throw std::invalid_argument("k_center_greedy: K out of range");
  if (seed_index >= n)
    throw std::invalid_argument("k_center_greedy: bad seed index");

  std::vector<size_t> centers{seed_index};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  chosen[seed_index] = 1;

  while (centers.size() < k) {
    size_t last = centers.back();
    for (size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double d = cosine_distance(all[i].vector, all[last].vector);
      nearest[i] = std::min(nearest[i], d);
    }
    size_t best = n;
    double best_d = -1.0;
    for (size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    centers.push_back(best);
    chosen[best] = 1;
  }
  return centers;
}

SelectionResult k_medoids(const EmbeddingSet& all,
                          const std::vector<size_t>& init) {
  const size_t n = all.size();
  const size_t k = init.size();
  if (k == 0 || k > n) throw std::invalid_argument("k_medoids: bad K");
  {
    std::vector<size_t> sorted(init);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
        sorted.back() >= n)
      throw std::invalid_argument("k_medoids: init ids must be distinct");
  }

  const std::vector<double> dist = distance_matrix(all);
  auto d = [&](size_t i, size_t j) { return dist[i * n + j]; };

  std::vector<size_t> medoids(init);
  std::vector<size_t> assign(n, 0);  // cluster index per sample
  double prev_objective = std::numeric_limits<double>::infinity();
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    // Assignment step: nearest medoid, ties to the lower dataset index.
    for (size_t i = 0; i < n; ++i) {
      size_t best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      size_t best_medoid = n;
      for (size_t c = 0; c < k; ++c) {
        double dc = d(i, medoids[c]);
        if (dc < best_d || (dc == best_d && medoids[c] < best_medoid)) {
          best_d = dc;
          best_c = c;
          best_medoid = medoids[c];
        }
      }
      assign[i] = best_c;
    }

    // Update step: within each cluster pick the member with minimal total
    // distance to the cluster, ties to the lower dataset index.
    bool changed = false;
    for (size_t c = 0; c < k; ++c) {
      size_t best = medoids[c];
      double best_cost = std::numeric_limits<double>::infinity();
      for (size_t m = 0; m < n; ++m) {
        if (assign[m] != c) continue;
        double cost = 0.0;
        for (size_t i = 0; i < n; ++i)
          if (assign[i] == c) cost += d(m, i);
        if (cost < best_cost || (cost == best_cost && m < best)) {
          best_cost = cost;
          best = m;
        }
      }
      if (best != medoids[c]) {
        medoids[c] = best;
        changed = true;
      }
    }

    double objective = 0.0;
    for (size_t i = 0; i < n; ++i) objective += d(i, medoids[assign[i]]);
    if (objective > prev_objective + 1e-12)
      throw std::logic_error("k_medoids: objective increased");
    prev_objective = objective;
    if (!changed) break;
  }

  // Final assignment against the stable medoid set, in canonical id order.
  std::sort(medoids.begin(), medoids.end(), [&](size_t a, size_t b) {
    return all[a].sample_id < all[b].sample_id;
  });
  SelectionResult result;
  for (size_t c = 0; c < k; ++c)
    result.support_ids.push_back(all[medoids[c]].sample_id);
  std::vector<char> is_medoid(n, 0);
  for (size_t m : medoids) is_medoid[m] = 1;

  double objective = 0.0;
  for (size_t i = 0; i < n; ++i) {
    size_t best_c = 0;
    double best_d = std::numeric_limits<double>::infinity();
    size_t best_medoid = n;
    for (size_t c = 0; c < k; ++c) {
      double dc = d(i, medoids[c]);
      if (dc < best_d || (dc == best_d && medoids[c] < best_medoid)) {
        best_d = dc;
        best_c = c;
        best_medoid = medoids[c];
      }
    }
    objective += best_d;
    result.distance[all[i].sample_id] = is_medoid[i] ? 0.0 : best_d;
    if (!is_medoid[i])
      result.assignment[all[i].sample_id] = all[medoids[best_c]].sample_id;
  }
  result.objective = objective;
  return result;
}

SelectionResult select_support(const EmbeddingSet& all, size_t k) {
  size_t seed = select_s1(all);
  std::vector<size_t> init = k_center_greedy(all, k, seed);
  return k_medoids(all, init);
}

SelectionResult select_first_k(const EmbeddingSet& all, size_t k) {
  const size_t n = all.size();
  if (k < 1 || k >= n)
    throw std::invalid_argument("select_first_k: K out of range");

  // Dataset order is lexicographic id order by construction upstream; sort
  // defensively so the baseline is always the lexicographic-first K.
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return all[a].sample_id < all[b].sample_id;
  });

  std::vector<size_t> support(order.begin(), order.begin() + k);
  SelectionResult result;
  for (size_t s : support) result.support_ids.push_back(all[s].sample_id);

  std::vector<char> is_support(n, 0);
  for (size_t s : support) is_support[s] = 1;
  double objective = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (is_support[i]) {
      result.distance[all[i].sample_id] = 0.0;
      continue;
    }
    size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t s : support) {
      double dc = cosine_distance(all[i].vector, all[s].vector);
      if (dc < best_d || (dc == best_d && s < best)) {
        best_d = dc;
        best = s;
      }
    }
    objective += best_d;
    result.distance[all[i].sample_id] = best_d;
    result.assignment[all[i].sample_id] = all[best].sample_id;
  }
  result.objective = objective;
  return result;
}

void save_selection(const SelectionResult& result, const EmbeddingSet& all,
                    const std::string& path) {
  nlohmann::ordered_json doc;
  doc["objective"] = result.objective;
  doc["support_ids"] = result.support_ids;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& item : all.items) {
    const std::string& id = item.sample_id;
    bool is_support = std::find(result.support_ids.begin(),
                                result.support_ids.end(),
                                id) != result.support_ids.end();
    nlohmann::ordered_json rec;
    rec["id"] = id;
    rec["role"] = is_support ? "support" : "query";
    rec["assigned_support"] =
        is_support ? id : result.assignment.at(id);
    rec["distance"] = result.distance.at(id);
    records.push_back(std::move(rec));
  }
  doc["records"] = std::move(records);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write selection manifest: " + path);
  out << doc.dump(2) << "\n";
}

SelectionResult load_selection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read selection manifest: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  SelectionResult result;
  result.objective = doc.at("objective").get<double>();
  result.support_ids = doc.at("support_ids").get<std::vector<std::string>>();
  for (const auto& rec : doc.at("records")) {
    std::string id = rec.at("id").get<std::string>();
    result.distance[id] = rec.at("distance").get<double>();
    if (rec.at("role").get<std::string>() == "query")
      result.assignment[id] = rec.at("assigned_support").get<std::string>();
  }
  return result;
}

}  // namespace mpa::select
