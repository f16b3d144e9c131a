#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "waveinv/signal.hpp"

namespace waveinv::io {

/// Binary signal layout: magic "WFSIG1\0\0", sample count as little-endian
/// uint64, then the samples as little-endian IEEE-754 doubles. The sample
/// interval lives in a `<file>.cfg` sidecar (`dt = ...`).
inline constexpr char kSignalMagic[8] = {'W', 'F', 'S', 'I', 'G', '1', '\0', '\0'};

void write_signal_binary(const std::filesystem::path& path, const Signal& s);
Signal read_signal_binary(const std::filesystem::path& path);

/// CSV with header `t_seconds,amplitude`. Lines starting with '#' are comments.
void write_signal_csv(std::ostream& os, const Signal& s);
void write_signal_csv(const std::filesystem::path& path, const Signal& s);
Signal read_signal_csv(const std::filesystem::path& path);

/// CSV with header `k,omega_rad_per_s,value,gamma`.
void write_feature_csv(std::ostream& os, const PhaseFeature& f, double duration);

/// Shortest representation that round-trips a double.
std::string format_double(double v);

/// Flat `key = value` text; '#' starts a comment. Duplicate keys keep the last value.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits by checksum_hex.
std::uint64_t fnv1a(std::string_view data);
std::string checksum_hex(std::string_view data);

}  // namespace waveinv::io
