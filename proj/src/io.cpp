#include "wide/io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wide/error.hpp"

namespace wide {

namespace {

constexpr std::uint8_t kU8Flag = 0x80;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

void put_f64(std::string& s, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::string header(const TorusGrid& g, int rank, bool u8) {
  std::string s = "WIDE";
  put_u32(s, 1);
  s.push_back(static_cast<char>(g.d));
  s.push_back(static_cast<char>(rank | (u8 ? kU8Flag : 0)));
  put_u32(s, static_cast<std::uint32_t>(g.n));
  return s;
}

int components(int d, int rank) { return rank == 0 ? 1 : rank == 1 ? d : d * d; }

int rank_of(int d, int ncomp) {
  if (ncomp == 1) return 0;
  if (ncomp == d) return 1;
  if (ncomp == d * d) return 2;
  throw Error("BadRank", "only scalar, vector and tensor fields can be written");
}

struct Parsed {
  FieldHeader h;
  std::string bytes;
  std::size_t offset = 14;
};

Parsed parse(const std::string& path) {
  Parsed p;
  p.bytes = read_text(path);
  const auto* b = reinterpret_cast<const unsigned char*>(p.bytes.data());
  if (p.bytes.size() < 14 || p.bytes.compare(0, 4, "WIDE") != 0)
    throw Error("BadFile", path + " is not a field file");
  p.h.version = get_u32(b + 4);
  if (p.h.version != 1) throw Error("BadFile", path + ": unsupported version " + std::to_string(p.h.version));
  p.h.d = b[8];
  p.h.u8 = (b[9] & kU8Flag) != 0;
  p.h.rank = b[9] & ~kU8Flag;
  p.h.n = static_cast<int>(get_u32(b + 10));
  if (p.h.d < 1 || p.h.d > 3 || p.h.rank > 2 || p.h.n < 1) throw Error("BadFile", path + ": bad header");
  const std::size_t per = TorusGrid(p.h.d, p.h.n).size() * components(p.h.d, p.h.rank) * (p.h.u8 ? 1 : 8);
  const std::size_t len = p.bytes.size() - 14;
  if (len == 0 || len % per != 0) throw Error("BadFile", path + ": payload size does not match the header");
  p.h.slices = len / per;
  return p;
}

}  // namespace

FieldHeader read_header(const std::string& path) { return parse(path).h; }

void write_field(const std::string& path, const Field& f) {
  std::string s = header(f.grid(), rank_of(f.grid().d, f.ncomp()), false);
  s.reserve(s.size() + f.values().size() * 8);
  for (double x : f.values()) put_f64(s, x);
  write_text(path, s);
}

Field read_field(const std::string& path) {
  const Parsed p = parse(path);
  if (p.h.u8 || p.h.slices != 1) throw Error("BadFile", path + " does not hold a single f64 field");
  Field f(TorusGrid(p.h.d, p.h.n), components(p.h.d, p.h.rank));
  const auto* b = reinterpret_cast<const unsigned char*>(p.bytes.data()) + p.offset;
  for (std::size_t i = 0; i < f.values().size(); ++i) f.values()[i] = get_f64(b + 8 * i);
  return f;
}

void write_spacetime(const std::string& path, const SpaceTimeField& f) {
  std::string s = header(f.grid, rank_of(f.grid.d, f.ncomp), false);
  s.reserve(s.size() + f.data.size() * 8);
  for (double x : f.data) put_f64(s, x);
  write_text(path, s);
}

SpaceTimeField read_spacetime(const std::string& path) {
  const Parsed p = parse(path);
  if (p.h.u8) throw Error("BadFile", path + " holds a mask");
  double t0 = 0.0, tau = 1.0;
  if (std::filesystem::exists(path + ".json")) {
    const auto j = nlohmann::json::parse(read_text(path + ".json"));
    t0 = j.value("t0", t0);
    tau = j.value("tau", tau);
  }
  SpaceTimeField f(TorusGrid(p.h.d, p.h.n), components(p.h.d, p.h.rank), p.h.slices, t0, tau);
  const auto* b = reinterpret_cast<const unsigned char*>(p.bytes.data()) + p.offset;
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = get_f64(b + 8 * i);
  return f;
}

void write_mask(const std::string& path, const TorusGrid& g, const std::vector<std::uint8_t>& mask) {
  if (mask.empty() || mask.size() % g.size() != 0) throw Error("BadFile", "mask length is not a multiple of the grid");
  std::string s = header(g, 0, true);
  for (auto x : mask) s.push_back(static_cast<char>(x ? 1 : 0));
  write_text(path, s);
}

std::vector<std::uint8_t> read_mask(const std::string& path, TorusGrid* g) {
  const Parsed p = parse(path);
  if (!p.h.u8 || p.h.rank != 0) throw Error("BadFile", path + " does not hold a mask");
  if (g) *g = TorusGrid(p.h.d, p.h.n);
  return {p.bytes.begin() + static_cast<long>(p.offset), p.bytes.end()};
}

void write_sidecar(const std::string& path, const nlohmann::json& meta) { write_text(path + ".json", meta.dump(2) + "\n"); }

nlohmann::json field_meta(const Field& f) {
  return {{"format", "WIDE"}, {"version", 1}, {"d", f.grid().d}, {"n", f.grid().n},
          {"rank", f.rank()}, {"ncomp", f.ncomp()}, {"period", "2pi"}, {"payload", "f64"}};
}

nlohmann::json spacetime_meta(const SpaceTimeField& f) {
  return {{"format", "WIDE"}, {"version", 1},  {"d", f.grid.d},   {"n", f.grid.n},
          {"rank", f.rank()}, {"ncomp", f.ncomp}, {"nt", f.nt}, {"t0", f.t0},
          {"tau", f.tau},     {"period", "2pi"}, {"payload", "f64"}};
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IOError", "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("IOError", "write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IOError", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wide
