#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpa/embed/embedding.hpp"
#include "mpa/segment/wire.hpp"

namespace mpa::embed {

/// Wire-protocol encoder backend. The handshake must report kind "embedder"
/// and a positive dimension.
class ExternalEmbedder {
 public:
  explicit ExternalEmbedder(const std::string& address,
                            int timeout_ms = 120000, int max_in_flight = 4);

  int dimension() const { return dimension_; }
  const std::string& tag() const { return tag_; }

  /// Embeds (sample_id, image_path) pairs, pipelined over the wire.
  std::vector<Embedding> embed_paths(
      const std::vector<std::pair<std::string, std::string>>& id_paths);

 private:
  segment::WireClient wire_;
  int dimension_ = 0;
  std::string tag_;
};

}  // namespace mpa::embed
