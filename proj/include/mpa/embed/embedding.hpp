#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpa/core/types.hpp"

namespace mpa::embed {

/// Fixed-length feature vector for one sample.
struct Embedding {
  std::string sample_id;
  std::vector<float> vector;
};

/// On-disk collection of embeddings produced by one backend. All vectors
/// share a dimension; the backend tag keeps toy and external embeddings from
/// mixing.
struct EmbeddingCache {
  std::string backend_tag;
  uint32_t dimension = 0;
  std::map<std::string, std::vector<float>> entries;

  bool contains(const std::string& id) const { return entries.count(id) > 0; }
};

/// Hermetic stand-in encoder: grayscale, area-pool to 16x16, flatten to 256
/// dims, L2-normalize. A constant image (including all-black) maps to the
/// uniform unit vector.
Embedding embed_toy(const core::ImageTensor& image,
                    const std::string& sample_id = "");

inline constexpr int kToyDim = 256;
inline constexpr const char* kToyBackendTag = "toy";

/// Binary cache serialization. Layout: magic "MPAE", LE u32 version, u32
/// count, u32 dimension, u16 tag-length + tag, then per entry u16 id-length +
/// UTF-8 id + dimension float32 values. Entries are written in id order.
void cache_write(const EmbeddingCache& cache, const std::string& path);
EmbeddingCache cache_read(const std::string& path);

}  // namespace mpa::embed
