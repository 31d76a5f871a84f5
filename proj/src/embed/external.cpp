#include "mpa/embed/external.hpp"

namespace mpa::embed {

ExternalEmbedder::ExternalEmbedder(const std::string& address, int timeout_ms,
                                   int max_in_flight)
    : wire_(segment::open_channel(address), timeout_ms, max_in_flight) {
  const nlohmann::json hello = wire_.hello();
  if (hello.value("kind", "") != "embedder") {
    throw segment::BackendError("backend is not an embedder: " + hello.dump());
  }
  dimension_ = hello.value("dim", 0);
  if (dimension_ <= 0) {
    throw segment::BackendError("embedder reported no dimension");
  }
  tag_ = hello.value("tag", "external");
}

std::vector<Embedding> ExternalEmbedder::embed_paths(
    const std::vector<std::pair<std::string, std::string>>& id_paths) {
  std::vector<nlohmann::json> requests;
  requests.reserve(id_paths.size());
  for (const auto& [id, path] : id_paths) {
    requests.push_back({{"op", "embed"},
                        {"id", wire_.next_id(id)},
                        {"image", path}});
  }
  const std::vector<nlohmann::json> replies = wire_.call_batch(requests);

  std::vector<Embedding> out;
  out.reserve(id_paths.size());
  for (size_t i = 0; i < replies.size(); ++i) {
    const nlohmann::json& reply = replies[i];
    if (reply.value("op", "") == "error") {
      throw segment::BackendError("embed failed for " + id_paths[i].first +
                                  ": " + reply.value("message", ""));
    }
    Embedding e;
    e.sample_id = id_paths[i].first;
    e.vector = reply.at("vector").get<std::vector<float>>();
    if (static_cast<int>(e.vector.size()) != dimension_) {
      throw segment::BackendError("embedding dimension mismatch for " +
                                  e.sample_id);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mpa::embed
