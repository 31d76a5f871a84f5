#include "mpa/core/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

namespace mpa::core {

namespace fs = std::filesystem;

std::vector<SampleRecord> list_dataset(const std::string& root) {
  const fs::path images = fs::path(root) / "images";
  if (!fs::is_directory(images)) {
    throw std::runtime_error("dataset has no images directory: " +
                             images.string());
  }
  std::vector<SampleRecord> samples;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") {
      continue;
    }
    SampleRecord rec;
    rec.id = entry.path().stem().string();
    rec.image_path = entry.path().string();
    const fs::path mask = fs::path(root) / "masks" / (rec.id + ".png");
    if (fs::is_regular_file(mask)) rec.mask_path = mask.string();
    samples.push_back(std::move(rec));
  }
  if (samples.empty()) {
    throw std::runtime_error("dataset is empty: " + images.string());
  }
  std::sort(samples.begin(), samples.end(),
            [](const SampleRecord& a, const SampleRecord& b) {
              return a.id < b.id;
            });
  for (size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].id == samples[i - 1].id) {
      throw std::runtime_error("duplicate sample id: " + samples[i].id);
    }
  }
  return samples;
}

}  // namespace mpa::core
