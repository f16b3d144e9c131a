#include "waveinv/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace waveinv::io {
namespace {

static_assert(std::endian::native == std::endian::little, "binary signal I/O assumes a little-endian host");

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw std::runtime_error("cannot parse number '" + t + "'");
  }
  return v;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".cfg";
  return p;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_signal_binary(const std::filesystem::path& path, const Signal& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint64_t n = s.size();
  os.write(kSignalMagic, sizeof(kSignalMagic));
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(s.samples().data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!os) throw std::runtime_error("write failed for " + path.string());

  std::ofstream side(sidecar_path(path));
  side << "dt = " << format_double(s.dt()) << "\n";
  side << "n = " << n << "\n";
  if (!side) throw std::runtime_error("write failed for sidecar of " + path.string());
}

Signal read_signal_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  std::uint64_t n = 0;
  is.read(magic, sizeof(magic));
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!is || std::memcmp(magic, kSignalMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path.string() + " is not a WFSIG1 signal file");
  }
  std::vector<double> samples(n);
  is.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("truncated signal file " + path.string());

  const auto side = read_key_values(sidecar_path(path));
  const auto it = side.find("dt");
  if (it == side.end()) throw std::runtime_error("sidecar for " + path.string() + " lacks dt");
  return Signal(std::move(samples), parse_double(it->second));
}

void write_signal_csv(std::ostream& os, const Signal& s) {
  os << "t_seconds,amplitude\n";
  for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s.time(i)) << ',' << format_double(s[i]) << '\n';
}

void write_signal_csv(const std::filesystem::path& path, const Signal& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_signal_csv(os, s);
}

Signal read_signal_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::vector<double> t, y;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      if (trim(line) != "t_seconds,amplitude") throw std::runtime_error("unexpected signal CSV header");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed signal CSV row: " + line);
    t.push_back(parse_double(std::string_view(line).substr(0, comma)));
    y.push_back(parse_double(std::string_view(line).substr(comma + 1)));
  }
  if (t.size() < 2) throw std::runtime_error("signal CSV needs at least two rows");
  return Signal(std::move(y), t[1] - t[0]);
}

void write_feature_csv(std::ostream& os, const PhaseFeature& f, double duration) {
  constexpr double two_pi = 6.283185307179586;
  os << "k,omega_rad_per_s,value,gamma\n";
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    os << k << ',' << format_double(two_pi * static_cast<double>(k) / duration) << ','
       << format_double(f.values[k]) << ',' << format_double(f.gamma[k]) << '\n';
  }
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return kv;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

KeyValues read_key_values(const std::filesystem::path& path) { return parse_key_values(read_text(path)); }

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

}  // namespace waveinv::io
