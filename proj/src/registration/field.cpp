#include "mpa/registration/field.hpp"

#include <cstring>
#include <fstream>

#include "mpa/core/binary_io.hpp"

namespace mpa::registration {

using core::read_f32;
using core::read_le;
using core::write_f32;
using core::write_le;

namespace {
constexpr uint32_t kVersion = 1;

void check_magic(std::istream& in, const char* magic, const char* what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw std::runtime_error(std::string(what) + ": bad magic");
}
}  // namespace

void save_field(const DeformationField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write field file: " + path);
  out.write("MPAD", 4);
  write_le<uint32_t>(out, kVersion);
  write_le<uint32_t>(out, static_cast<uint32_t>(field.height));
  write_le<uint32_t>(out, static_cast<uint32_t>(field.width));
  for (float v : field.u) write_f32(out, v);
  if (!out) throw std::runtime_error("field file: write failed: " + path);
}

DeformationField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  check_magic(in, "MPAD", "field file");
  uint32_t version = read_le<uint32_t>(in, "field file");
  if (version != kVersion)
    throw std::runtime_error("field file: unsupported version");
  uint32_t h = read_le<uint32_t>(in, "field file");
  uint32_t w = read_le<uint32_t>(in, "field file");
  if (h == 0 || w == 0) throw std::runtime_error("field file: empty grid");
  DeformationField field(static_cast<int>(h), static_cast<int>(w));
  for (float& v : field.u) v = read_f32(in, "field file");
  return field;
}

void save_scalar_grid(const core::ScalarField& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write grid file: " + path);
  out.write("MPAL", 4);
  write_le<uint32_t>(out, kVersion);
  write_le<uint32_t>(out, static_cast<uint32_t>(grid.height));
  write_le<uint32_t>(out, static_cast<uint32_t>(grid.width));
  for (float v : grid.data) write_f32(out, v);
  if (!out) throw std::runtime_error("grid file: write failed: " + path);
}

core::ScalarField load_scalar_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  check_magic(in, "MPAL", "grid file");
  uint32_t version = read_le<uint32_t>(in, "grid file");
  if (version != kVersion)
    throw std::runtime_error("grid file: unsupported version");
  uint32_t h = read_le<uint32_t>(in, "grid file");
  uint32_t w = read_le<uint32_t>(in, "grid file");
  if (h == 0 || w == 0) throw std::runtime_error("grid file: empty grid");
  core::ScalarField grid(static_cast<int>(h), static_cast<int>(w));
  for (float& v : grid.data) v = read_f32(in, "grid file");
  return grid;
}

}  // namespace mpa::registration
