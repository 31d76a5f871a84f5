#include "mpa/embed/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mpa/core/binary_io.hpp"
#include "mpa/core/resample.hpp"

namespace mpa::embed {

using core::read_f32;
using core::read_le;
using core::write_f32;
using core::write_le;

namespace {
constexpr int kPool = 16;
constexpr char kMagic[4] = {'M', 'P', 'A', 'E'};
constexpr uint32_t kVersion = 1;
constexpr const char* kWhat = "embedding cache";
}  // namespace

Embedding embed_toy(const core::ImageTensor& image,
                    const std::string& sample_id) {
  core::ImageTensor gray = core::to_grayscale(image);
  core::ImageTensor pooled = core::resize_area(gray, kPool, kPool);

  Embedding e;
  e.sample_id = sample_id;
  e.vector.assign(pooled.data.begin(), pooled.data.end());

  double norm2 = 0.0;
  for (float v : e.vector) norm2 += static_cast<double>(v) * v;
  if (norm2 <= 0.0) {
    // Limit of constant images: the uniform unit vector.
    e.vector.assign(kToyDim, 1.0f / kPool);
    return e;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
  for (float& v : e.vector) v *= inv;
  return e;
}

void cache_write(const EmbeddingCache& cache, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embedding cache: " + path);
  out.write(kMagic, 4);
  write_le<uint32_t>(out, kVersion);
  write_le<uint32_t>(out, static_cast<uint32_t>(cache.entries.size()));
  write_le<uint32_t>(out, cache.dimension);
  if (cache.backend_tag.size() > 0xffff)
    throw std::runtime_error("embedding cache: backend tag too long");
  write_le<uint16_t>(out, static_cast<uint16_t>(cache.backend_tag.size()));
  out.write(cache.backend_tag.data(),
            static_cast<std::streamsize>(cache.backend_tag.size()));
  for (const auto& [id, vec] : cache.entries) {
    if (vec.size() != cache.dimension)
      throw std::runtime_error("embedding cache: dimension mismatch for " + id);
    if (id.size() > 0xffff)
      throw std::runtime_error("embedding cache: id too long: " + id);
    write_le<uint16_t>(out, static_cast<uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float v : vec) write_f32(out, v);
  }
  if (!out) throw std::runtime_error("embedding cache: write failed: " + path);
}

EmbeddingCache cache_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding cache: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("embedding cache: bad magic in " + path);
  uint32_t version = read_le<uint32_t>(in, kWhat);
  if (version != kVersion)
    throw std::runtime_error("embedding cache: unsupported version");
  uint32_t count = read_le<uint32_t>(in, kWhat);
  EmbeddingCache cache;
  cache.dimension = read_le<uint32_t>(in, kWhat);
  uint16_t tag_len = read_le<uint16_t>(in, kWhat);
  cache.backend_tag.resize(tag_len);
  if (tag_len > 0) {
    in.read(cache.backend_tag.data(), tag_len);
    if (!in) throw std::runtime_error("embedding cache: truncated file");
  }
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t id_len = read_le<uint16_t>(in, kWhat);
    std::string id(id_len, '\0');
    if (id_len > 0) {
      in.read(id.data(), id_len);
      if (!in) throw std::runtime_error("embedding cache: truncated file");
    }
    std::vector<float> vec(cache.dimension);
    for (uint32_t d = 0; d < cache.dimension; ++d) vec[d] = read_f32(in, kWhat);
    cache.entries.emplace(std::move(id), std::move(vec));
  }
  return cache;
}

}  // namespace mpa::embed
