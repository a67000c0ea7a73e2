#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"

namespace axinsm {

namespace detail {

inline constexpr char snapshot_magic[8] = {'A', 'X', 'I', 'N', 'S', 'M', 'S', '1'};
inline constexpr std::uint32_t snapshot_version = 1;

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    bytes_.insert(bytes_.end(), b, b + sizeof(T));
  }
  void put_bytes(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("corrupt snapshot: truncated payload");
  }
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

struct NamedField {
  std::string name;
  const ScalarField2D* field;
};

inline void write_snapshot(const std::string& path, std::uint32_t kind, const GridSpec& g, double t,
                           const std::vector<NamedField>& fields) {
  ByteWriter w;
  w.put_bytes(snapshot_magic, sizeof snapshot_magic);
  w.put<std::uint32_t>(snapshot_version);
  w.put<std::uint32_t>(kind);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.Nr));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.Nz));
  w.put<double>(g.R);
  w.put<double>(g.Lz);
  w.put<double>(t);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(fields.size()));
  for (const auto& f : fields) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.name.size()));
    w.put_bytes(f.name.data(), f.name.size());
    w.put<std::uint8_t>(f.field->parity() == Parity::odd ? 1 : 0);
  }
  for (const auto& f : fields)
    for (double v : f.field->values()) w.put<double>(v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write snapshot '" + path + "'");
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error("I/O failure writing snapshot '" + path + "'");
}

}  // namespace detail

using Snapshot = std::variant<NSMState, MHDState>;

inline void save_snapshot(const NSMState& s, const std::string& path) {
  detail::write_snapshot(path, 0, s.grid(), s.t,
                         {{"omega_theta", &s.vorticity},
                          {"E_r", &s.electric.radial},
                          {"E_z", &s.electric.axial},
                          {"B_theta", &s.magnetic}});
}

inline void save_snapshot(const MHDState& s, const std::string& path) {
  detail::write_snapshot(path, 1, s.grid(), s.t, {{"omega_theta", &s.vorticity}, {"B_theta", &s.magnetic}});
}

inline Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(std::move(bytes));

  if (r.get_string(8) != std::string(detail::snapshot_magic, 8)) throw Error("bad snapshot magic in '" + path + "'");
  if (r.get<std::uint32_t>() != detail::snapshot_version) throw Error("unsupported snapshot version");
  const auto kind = r.get<std::uint32_t>();
  GridSpec g;
  g.Nr = static_cast<int>(r.get<std::uint32_t>());
  g.Nz = static_cast<int>(r.get<std::uint32_t>());
  g.R = r.get<double>();
  g.Lz = r.get<double>();
  const double t = r.get<double>();
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(std::string("corrupt snapshot: ") + e.what());
  }

  const std::vector<std::string> expected =
      kind == 0 ? std::vector<std::string>{"omega_theta", "E_r", "E_z", "B_theta"}
      : kind == 1 ? std::vector<std::string>{"omega_theta", "B_theta"}
                  : throw Error("corrupt snapshot: unknown state kind");
  const auto count = r.get<std::uint32_t>();
  if (count != expected.size()) throw Error("corrupt snapshot: field list mismatch");

  std::vector<ScalarField2D> fields;
  for (const auto& name : expected) {
    const auto len = r.get<std::uint32_t>();
    if (len > 64 || r.get_string(len) != name) throw Error("corrupt snapshot: field list mismatch");
    const auto parity = r.get<std::uint8_t>();
    if (parity > 1) throw Error("corrupt snapshot: bad parity tag");
    fields.emplace_back(g, parity == 1 ? Parity::odd : Parity::even);
  }
  for (auto& f : fields) {
    for (double& v : f.values()) v = r.get<double>();
    if (!f.finite()) throw Error("corrupt snapshot: non-finite sample");
    if (f.parity() == Parity::odd)
      for (int k = 0; k < g.Nz; ++k)
        if (f(0, k) != 0.0) throw Error("parity violated: odd field nonzero on the axis");
  }
  if (!r.at_end()) throw Error("corrupt snapshot: trailing bytes");

  auto check = [](const ScalarField2D& f, Parity p) {
    if (f.parity() != p) throw Error("parity violated: unexpected parity tag");
  };
  if (kind == 0) {
    NSMState s;
    check(fields[0], Parity::odd);
    check(fields[1], Parity::odd);
    check(fields[2], Parity::even);
    check(fields[3], Parity::odd);
    s.vorticity = std::move(fields[0]);
    s.electric = NoSwirlVec2(std::move(fields[1]), std::move(fields[2]));
    s.magnetic = std::move(fields[3]);
    s.t = t;
    return s;
  }
  MHDState s;
  check(fields[0], Parity::odd);
  check(fields[1], Parity::odd);
  s.vorticity = std::move(fields[0]);
  s.magnetic = std::move(fields[1]);
  s.t = t;
  return s;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_ledger_csv(const NormLedger& ledger, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write ledger '" + path + "'");
  out << "t,name,value\n";
  for (const auto& row : ledger.rows()) out << format_real(row.t) << ',' << row.name << ',' << format_real(row.value) << '\n';
  if (!out) throw Error("I/O failure writing ledger '" + path + "'");
}

inline NormLedger read_ledger_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ledger '" + path + "'");
  NormLedger ledger;
  std::string line;
  std::getline(in, line);
  if (line != "t,name,value") throw Error("ledger '" + path + "': bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) throw Error("ledger '" + path + "': malformed row");
    ledger.append(std::stod(line.substr(0, a)), line.substr(a + 1, b - a - 1), std::stod(line.substr(b + 1)));
  }
  return ledger;
}

}  // namespace axinsm
