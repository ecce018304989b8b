// pt_io.hpp: binary process-tensor files with CRC32 and a JSON sidecar
//
// Layout (little-endian):
//   "TTIPT" 0x01
//   i32 d, i32 chi, f64 dt, i32 k_max, f64 eps_rel, f64 tol_inner, u8 variant
//   u8 has_bath, u8 bath kind, f64 eta, omega_c, p, inv_w2, omega_q, omega_r, beta
//   f64 eta_rel_tol, f64 log_norm, f64 shift
//   f64 lambdas[d], c128 basis[d*d] (column-major)
//   i32 n_phase, f64 phase_cum[n_phase]
//   c128 site[chi * d^2 * chi], element l + chi*(mu + d^2*r), mu = ml*d + mr
//   c128 left[chi], c128 right[chi]
//   u32 crc32 of all preceding bytes
#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>

#include "ttipt/itebd.hpp"

namespace ttipt {

inline constexpr char kPtMagic[5] = {'T', 'T', 'I', 'P', 'T'};
inline constexpr std::uint8_t kPtVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "process-tensor files assume a little-endian host");

namespace detail {

struct Writer {
  std::string buf;
  template <class T>
  void put(const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_raw(const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  std::size_t end;
  template <class T>
  T get() {
    T v;
    get_raw(&v, sizeof(T));
    return v;
  }
  void get_raw(void* p, std::size_t n) {
    if (pos + n > end) throw FormatError("process-tensor file is truncated");
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
};

inline std::uint32_t crc32_of(const char* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(p), chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace detail

inline std::string serialize_pt(const ProcessTensor& pt) {
  const int d = pt.d, d2 = d * d, chi = pt.chi;
  if (static_cast<int>(pt.T.size()) != d2 || pt.left.size() != chi || pt.right.size() != chi)
    throw DomainError("process tensor is inconsistent; refusing to serialize");
  detail::Writer w;
  w.put_raw(kPtMagic, 5);
  w.put(kPtVersion);
  const auto& m = pt.meta;
  w.put<std::int32_t>(d);
  w.put<std::int32_t>(chi);
  w.put(m.dt);
  w.put<std::int32_t>(m.k_max);
  w.put(m.eps_rel);
  w.put(m.tol_inner);
  w.put<std::uint8_t>(m.variant == Variant::Baseline ? 0 : 1);
  w.put<std::uint8_t>(m.has_bath ? 1 : 0);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.bath.kind));
  for (double x : {m.bath.eta, m.bath.omega_c, m.bath.p, m.bath.inv_w2, m.bath.omega_q,
                   m.bath.omega_r, m.bath.beta})
    w.put(x);
  w.put(m.eta_rel_tol);
  w.put(m.log_norm);
  w.put(pt.shift);
  w.put_raw(pt.lambdas.data(), sizeof(double) * d);
  w.put_raw(pt.basis.data(), sizeof(cplx) * d2);
  w.put<std::int32_t>(static_cast<std::int32_t>(pt.phase_cum.size()));
  w.put_raw(pt.phase_cum.data(), sizeof(double) * pt.phase_cum.size());
  for (int r = 0; r < chi; ++r)
    for (int mu = 0; mu < d2; ++mu) w.put_raw(pt.T[mu].col(r).data(), sizeof(cplx) * chi);
  w.put_raw(pt.left.data(), sizeof(cplx) * chi);
  w.put_raw(pt.right.data(), sizeof(cplx) * chi);
  w.put(detail::crc32_of(w.buf.data(), w.buf.size()));
  return std::move(w.buf);
}

inline ProcessTensor deserialize_pt(const std::string& buf) {
  if (buf.size() < 6 || std::memcmp(buf.data(), kPtMagic, 5) != 0)
    throw FormatError("not a process-tensor file (bad magic)");
  if (static_cast<std::uint8_t>(buf[5]) != kPtVersion)
    throw FormatError("unsupported process-tensor file version " +
                      std::to_string(static_cast<unsigned>(static_cast<std::uint8_t>(buf[5]))));
  if (buf.size() < 10) throw FormatError("CRC mismatch: process-tensor file is truncated");
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
  if (detail::crc32_of(buf.data(), buf.size() - 4) != stored)
    throw FormatError("CRC mismatch: process-tensor file is corrupted or truncated");
  detail::Reader r{buf, 6, buf.size() - 4};
  ProcessTensor pt;
  auto& m = pt.meta;
  const int d = r.get<std::int32_t>(), chi = r.get<std::int32_t>();
  if (d < 1 || chi < 1 || d > 4096) throw FormatError("bad dimensions in process-tensor header");
  pt.d = d;
  pt.chi = chi;
  m.dt = r.get<double>();
  m.k_max = r.get<std::int32_t>();
  m.eps_rel = r.get<double>();
  m.tol_inner = r.get<double>();
  const auto v = r.get<std::uint8_t>();
  if (v > 1) throw FormatError("bad variant code in process-tensor header");
  m.variant = v == 0 ? Variant::Baseline : Variant::Enhanced;
  m.has_bath = r.get<std::uint8_t>() != 0;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 2) throw FormatError("bad bath kind in process-tensor header");
  m.bath.kind = static_cast<BathKind>(kind);
  for (double* x : {&m.bath.eta, &m.bath.omega_c, &m.bath.p, &m.bath.inv_w2,
                    &m.bath.omega_q, &m.bath.omega_r, &m.bath.beta})
    *x = r.get<double>();
  m.eta_rel_tol = r.get<double>();
  m.log_norm = r.get<double>();
  pt.shift = r.get<double>();
  const int d2 = d * d;
  pt.lambdas.resize(d);
  r.get_raw(pt.lambdas.data(), sizeof(double) * d);
  pt.basis.resize(d, d);
  r.get_raw(pt.basis.data(), sizeof(cplx) * d2);
  const int np = r.get<std::int32_t>();
  if (np < 0) throw FormatError("bad phase table length");
  pt.phase_cum.resize(np);
  r.get_raw(pt.phase_cum.data(), sizeof(double) * np);
  const std::size_t need = sizeof(cplx) * (std::size_t(chi) * d2 * chi + 2 * std::size_t(chi));
  if (r.end - r.pos != need) throw FormatError("process-tensor payload size mismatch");
  pt.T.assign(d2, cmat(chi, chi));
  for (int c = 0; c < chi; ++c)
    for (int mu = 0; mu < d2; ++mu) r.get_raw(pt.T[mu].col(c).data(), sizeof(cplx) * chi);
  pt.left.resize(chi);
  pt.right.resize(chi);
  r.get_raw(pt.left.data(), sizeof(cplx) * chi);
  r.get_raw(pt.right.data(), sizeof(cplx) * chi);
  return pt;
}

inline nlohmann::json pt_metadata(const ProcessTensor& pt) {
  const auto& m = pt.meta;
  nlohmann::json j;
  j["format"] = "TTIPT";
  j["version"] = kPtVersion;
  j["index_order"] = "site element l + chi*(mu + d^2*r), mu = ml*d + mr";
  j["d"] = pt.d;
  j["chi"] = pt.chi;
  j["dt"] = m.dt;
  j["k_max"] = m.k_max;
  j["eps_rel"] = m.eps_rel;
  j["tol_inner"] = m.tol_inner;
  j["variant"] = to_string(m.variant);
  if (m.has_bath) {
    j["bath"] = {{"kind", to_string(m.bath.kind)}, {"eta", m.bath.eta},
                 {"omega_c", m.bath.omega_c}, {"p", m.bath.p},
                 {"inv_w2", m.bath.inv_w2}, {"omega_q", m.bath.omega_q},
                 {"omega_r", m.bath.omega_r},
                 {"beta", std::isinf(m.bath.beta) ? nlohmann::json("inf")
                                                  : nlohmann::json(m.bath.beta)}};
  }
  j["eta_rel_tol"] = m.eta_rel_tol;
  j["log_norm"] = m.log_norm;
  j["shift"] = pt.shift;
  j["wall_seconds"] = m.wall_seconds;
  j["peak_elements"] = m.peak_elements;
  j["trace_eigenvalue_abs"] = m.trace_eigenvalue_abs;
  j["right_gap"] = m.right_gap;
  j["left_gap"] = m.left_gap;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : m.steps)
    steps.push_back({{"k", s.k}, {"chi", s.chi}, {"alpha", s.alpha}, {"beta1", s.beta1},
                     {"beta2", s.beta2}, {"seconds", s.seconds}, {"peak", s.peak}});
  j["steps"] = steps;
  return j;
}

// Writes <path> and <path>.json.
inline void save_pt(const ProcessTensor& pt, const std::string& path) {
  const std::string bytes = serialize_pt(pt);
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("write failed for '" + path + "'");
  }
  std::ofstream s(path + ".json");
  if (!s) throw FormatError("cannot open '" + path + ".json' for writing");
  s << pt_metadata(pt).dump(2) << "\n";
}

inline ProcessTensor load_pt(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open process-tensor file '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_pt(buf);
}

}  // namespace ttipt
