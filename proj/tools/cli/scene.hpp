#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "loggauss/loggauss.hpp"

namespace loggauss::cli {

/// Everything a command needs from a scene file.
///
/// Polynomial scenes give `polynomials` and `dim_k`; affine scenes give `A`
/// (n rows of k entries) and `b` instead and may omit `dim_k`.
struct Scene {
  std::size_t n = 0;
  std::vector<std::string> polynomials;
  std::size_t dim_k = 0;
  Window window;
  std::size_t resolution = 64;
  std::size_t args_per_fiber = 32;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::optional<CMatrix> a;
  std::optional<CVector> b;

  bool is_affine() const { return a.has_value(); }

  AffineLinearSpace affine_space() const {
    if (!a) throw Error(ErrorKind::InvalidArgument, "scene does not define A and b");
    return AffineLinearSpace(*a, *b, tolerances.rank);
  }

  VarietySystem variety() const {
    if (is_affine()) return affine_space().implicit_system();
    return VarietySystem::parse(n, polynomials, dim_k);
  }
};

namespace detail {

inline double parse_double(std::string_view s, std::string_view context) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::InvalidArgument, "malformed number '" + std::string(s) + "' in " +
                                                std::string(context));
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Complex literal: "a", "bi", "a+bi", "a-bi", with "i" / "-i" for unit
/// imaginary parts and exponents allowed in both parts.
inline Complex parse_complex(std::string_view text) {
  const std::string_view s = detail::trim(text);
  if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty complex literal");
  if (s.back() != 'i') return {detail::parse_double(s, text), 0.0};
  const std::string_view body = s.substr(0, s.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t p = body.size(); p-- > 1;) {
    if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  auto imag_part = [&](std::string_view t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return detail::parse_double(t, text);
  };
  if (split == std::string_view::npos) return {0.0, imag_part(body)};
  return {detail::parse_double(body.substr(0, split), text), imag_part(body.substr(split))};
}

/// Comma-separated complex literals.
inline Point parse_point(std::string_view text) {
  Point z;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    z.push_back(parse_complex(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return z;
}

inline Complex json_complex(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_string()) return parse_complex(j.get<std::string>());
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::InvalidArgument, "complex value must be a number, [re, im] or a string");
}

inline Scene parse_scene(const nlohmann::json& j) {
  static const std::set<std::string> allowed{"n",          "polynomials", "dim_k",
                                             "window",     "resolution",  "args_per_fiber",
                                             "tolerances", "seed",        "A",
                                             "b"};
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "scene must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(ErrorKind::InvalidArgument, "unknown scene key '" + key + "'");

  auto integer = [&](const char* key, std::int64_t min) -> std::int64_t {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < min)
      throw Error(ErrorKind::InvalidArgument,
                  std::string("'") + key + "' must be an integer >= " + std::to_string(min));
    return v.get<std::int64_t>();
  };

  Scene s;
  if (!j.contains("n")) throw Error(ErrorKind::InvalidArgument, "scene needs 'n'");
  s.n = static_cast<std::size_t>(integer("n", 2));

  const bool affine = j.contains("A") || j.contains("b");
  if (affine) {
    if (!j.contains("A") || !j.contains("b"))
      throw Error(ErrorKind::InvalidArgument, "affine scenes need both 'A' and 'b'");
    if (j.contains("polynomials"))
      throw Error(ErrorKind::InvalidArgument, "scene cannot define both polynomials and A/b");
    const auto& ja = j.at("A");
    const auto& jb = j.at("b");
    if (!ja.is_array() || ja.size() != s.n || !jb.is_array() || jb.size() != s.n)
      throw Error(ErrorKind::InvalidArgument, "'A' and 'b' must have n rows");
    if (!ja[0].is_array() || ja[0].empty())
      throw Error(ErrorKind::InvalidArgument, "'A' rows must be non-empty arrays");
    const std::size_t k = ja[0].size();
    CMatrix a(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(k));
    CVector b(static_cast<Eigen::Index>(s.n));
    for (std::size_t r = 0; r < s.n; ++r) {
      if (!ja[r].is_array() || ja[r].size() != k)
        throw Error(ErrorKind::InvalidArgument, "'A' rows must all have k entries");
      for (std::size_t c = 0; c < k; ++c)
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = json_complex(ja[r][c]);
      b(static_cast<Eigen::Index>(r)) = json_complex(jb[r]);
    }
    s.a = std::move(a);
    s.b = std::move(b);
    s.dim_k = k;
    if (j.contains("dim_k") && static_cast<std::size_t>(integer("dim_k", 1)) != k)
      throw Error(ErrorKind::InvalidArgument, "'dim_k' disagrees with the columns of 'A'");
  } else {
    if (!j.contains("polynomials") || !j.contains("dim_k"))
      throw Error(ErrorKind::InvalidArgument, "scene needs 'polynomials' and 'dim_k' (or 'A' and 'b')");
    const auto& jp = j.at("polynomials");
    if (!jp.is_array() || jp.empty())
      throw Error(ErrorKind::InvalidArgument, "'polynomials' must be a non-empty array");
    for (const auto& p : jp) {
      if (!p.is_string()) throw Error(ErrorKind::InvalidArgument, "polynomials must be strings");
      s.polynomials.push_back(p.get<std::string>());
    }
    s.dim_k = static_cast<std::size_t>(integer("dim_k", 1));
  }

  if (j.contains("window")) {
    const auto& jw = j.at("window");
    if (!jw.is_array() || jw.size() != s.n)
      throw Error(ErrorKind::InvalidArgument, "'window' must have one [lo, hi] per coordinate");
    for (const auto& iv : jw) {
      if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
        throw Error(ErrorKind::InvalidArgument, "window intervals must be [lo, hi]");
      s.window.ranges.emplace_back(iv[0].get<double>(), iv[1].get<double>());
    }
  } else {
    s.window.ranges.assign(s.n, {-3.0, 3.0});
  }
  s.window.validate();

  if (j.contains("resolution")) s.resolution = static_cast<std::size_t>(integer("resolution", 2));
  if (j.contains("args_per_fiber"))
    s.args_per_fiber = static_cast<std::size_t>(integer("args_per_fiber", 1));
  if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(integer("seed", 0));
  if (j.contains("tolerances")) {
    const auto& jt = j.at("tolerances");
    if (!jt.is_object()) throw Error(ErrorKind::InvalidArgument, "'tolerances' must be an object");
    for (const auto& [key, value] : jt.items()) {
      if (key != "rank" && key != "residual")
        throw Error(ErrorKind::InvalidArgument, "unknown tolerance key '" + key + "'");
      if (!value.is_number() || !(value.get<double>() > 0.0))
        throw Error(ErrorKind::InvalidArgument, "tolerance '" + key + "' must be positive");
      (key == "rank" ? s.tolerances.rank : s.tolerances.residual) = value.get<double>();
    }
  }

  // Validate early so that bad scenes fail before any command runs.
  if (!s.is_affine()) (void)s.variety();
  return s;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open scene file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "scene file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scene(j);
}

}  // namespace loggauss::cli
