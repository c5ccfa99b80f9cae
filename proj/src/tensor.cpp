#include "dvar/tensor.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dvar/rng.hpp"

namespace dvar {

namespace {

void put_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("DVT1: truncated header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_dvt1_stream(std::ostream& os, const std::vector<uint32_t>& dims,
                       const std::vector<float>& payload) {
  size_t expect = 1;
  for (uint32_t d : dims) expect *= d;
  if (expect != payload.size()) throw DimensionError("DVT1: dims do not match payload size");
  os.write("DVT1", 4);
  put_u32le(os, static_cast<uint32_t>(dims.size()));
  for (uint32_t d : dims) put_u32le(os, d);
  // f32 little-endian payload; this code targets little-endian hosts.
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * 4));
  if (!os) throw IoError("DVT1: stream write failed");
}

void read_dvt1_stream(std::istream& is, std::vector<uint32_t>& dims, std::vector<float>& payload) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DVT1", 4) != 0) throw IoError("DVT1: bad magic");
  uint32_t rank = get_u32le(is);
  if (rank > 8) throw IoError("DVT1: unreasonable rank");
  dims.resize(rank);
  size_t total = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    dims[i] = get_u32le(is);
    total *= dims[i];
  }
  payload.resize(total);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total * 4));
  if (!is) throw IoError("DVT1: truncated payload");
}

void write_dvt1(const std::string& path, const std::vector<uint32_t>& dims,
                const std::vector<float>& payload) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("DVT1: cannot open for write: " + path);
  write_dvt1_stream(os, dims, payload);
  if (!os) throw IoError("DVT1: write failed: " + path);
}

void read_dvt1(const std::string& path, std::vector<uint32_t>& dims, std::vector<float>& payload) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("DVT1: cannot open: " + path);
  try {
    read_dvt1_stream(is, dims, payload);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " in " + path);
  }
}

void write_dvt1_matrix_stream(std::ostream& os, const Matrix& m) {
  std::vector<float> payload;
  payload.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) payload.push_back(static_cast<float>(m(r, c)));
  write_dvt1_stream(os, {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())},
                    payload);
}

Matrix read_dvt1_matrix_stream(std::istream& is) {
  std::vector<uint32_t> dims;
  std::vector<float> payload;
  read_dvt1_stream(is, dims, payload);
  if (dims.size() != 2) throw IoError("DVT1: expected rank-2 tensor");
  Matrix m(dims[0], dims[1]);
  size_t i = 0;
  for (uint32_t r = 0; r < dims[0]; ++r)
    for (uint32_t c = 0; c < dims[1]; ++c) m(r, c) = payload[i++];
  return m;
}

void write_dvt1_matrix(const std::string& path, const Matrix& m) {
  std::vector<float> payload;
  payload.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) payload.push_back(static_cast<float>(m(r, c)));
  write_dvt1(path, {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())}, payload);
}

Matrix read_dvt1_matrix(const std::string& path) {
  std::vector<uint32_t> dims;
  std::vector<float> payload;
  read_dvt1(path, dims, payload);
  if (dims.size() != 2) throw IoError("DVT1: expected rank-2 tensor in " + path);
  Matrix m(dims[0], dims[1]);
  size_t i = 0;
  for (uint32_t r = 0; r < dims[0]; ++r)
    for (uint32_t c = 0; c < dims[1]; ++c) m(r, c) = payload[i++];
  return m;
}

void write_dvt1_feature(const std::string& path, const FeatureMap& f) {
  std::vector<float> payload;
  payload.reserve(static_cast<size_t>(f.rows.size()));
  for (Eigen::Index r = 0; r < f.rows.rows(); ++r)
    for (Eigen::Index c = 0; c < f.rows.cols(); ++c)
      payload.push_back(static_cast<float>(f.rows(r, c)));
  write_dvt1(path,
             {static_cast<uint32_t>(f.h), static_cast<uint32_t>(f.w),
              static_cast<uint32_t>(f.channels())},
             payload);
}

FeatureMap read_dvt1_feature(const std::string& path) {
  std::vector<uint32_t> dims;
  std::vector<float> payload;
  read_dvt1(path, dims, payload);
  if (dims.size() != 3) throw IoError("DVT1: expected rank-3 tensor in " + path);
  FeatureMap f(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  size_t i = 0;
  for (Eigen::Index r = 0; r < f.rows.rows(); ++r)
    for (Eigen::Index c = 0; c < f.rows.cols(); ++c) f.rows(r, c) = payload[i++];
  return f;
}

void write_pgm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("PGM: cannot open for write: " + path);
  os << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      double v = std::clamp(img(y, x), 0.0, 1.0);
      unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
      os.write(reinterpret_cast<const char*>(&b), 1);
    }
  if (!os) throw IoError("PGM: write failed: " + path);
}

Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("PGM: cannot open: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5") throw IoError("PGM: not binary P5: " + path);
  int w = 0, h = 0, maxval = 0;
  is >> w >> h >> maxval;
  if (!is || w < 1 || h < 1 || maxval != 255) throw IoError("PGM: bad header: " + path);
  is.get();  // single whitespace after maxval
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int b = is.get();
      if (b < 0) throw IoError("PGM: truncated payload: " + path);
      img(y, x) = static_cast<double>(b) / 255.0;
    }
  return img;
}

uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("hash_file: cannot open: " + path);
  uint64_t h = 0xCBF29CE484222325ULL;
  char buf[4096];
  while (is) {
    is.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<size_t>(is.gcount()), h);
  }
  return h;
}

uint64_t hash_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> rel;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), dir).generic_string());
  }
  std::sort(rel.begin(), rel.end());
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& r : rel) {
    h = fnv1a(r.data(), r.size(), h);
    uint64_t fh = hash_file((fs::path(dir) / r).string());
    h = fnv1a(&fh, sizeof(fh), h);
  }
  return h;
}

}  // namespace dvar
