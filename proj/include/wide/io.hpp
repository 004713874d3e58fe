#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wide/field.hpp"
#include "wide/truncation.hpp"

namespace wide {

/// Binary field files: "WIDE", u32 version, u8 d, u8 rank, u32 n, then the
/// payload in row-major node order, components fastest, little endian.
/// Rank bit 0x80 marks a u8 payload (masks); otherwise the payload is f64.
/// Space-time data stores its time slices back to back.
struct FieldHeader {
  std::uint32_t version = 1;
  int d = 2, rank = 0, n = 0;
  bool u8 = false;
  std::size_t slices = 1;  // payload length / (nodes * components)
};

void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);
void write_spacetime(const std::string& path, const SpaceTimeField& f);
// Window data (t0, tau) comes from the sidecar when present.
SpaceTimeField read_spacetime(const std::string& path);
void write_mask(const std::string& path, const TorusGrid& g, const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> read_mask(const std::string& path, TorusGrid* g = nullptr);
FieldHeader read_header(const std::string& path);

// path + ".json" with the grid and window metadata.
void write_sidecar(const std::string& path, const nlohmann::json& meta);
nlohmann::json field_meta(const Field& f);
nlohmann::json spacetime_meta(const SpaceTimeField& f);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace wide
