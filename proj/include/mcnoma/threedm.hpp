#pragma once

#include <mcnoma/types.hpp>

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace mcnoma {

/// Three-dimensional matching instance: triplets over X x Y x Z with
/// |X| = |Y| = |Z| = size. Coordinates are 1-based.
struct ThreeDM {
  int size = 0;
  std::vector<std::array<int, 3>> triplets;

  void validate() const {
    if (size < 1) throw std::invalid_argument("3DM: size must be >= 1");
    std::set<std::array<int, 3>> seen;
    for (const auto& t : triplets) {
      for (int c : t)
        if (c < 1 || c > size) throw std::invalid_argument("3DM: coordinate out of range");
      if (!seen.insert(t).second) throw std::invalid_argument("3DM: duplicate triplet");
    }
  }
};

/// A perfect matching: indices into the triplet list, sorted ascending.
struct Matching {
  std::vector<int> triplet_indices;
};

/// Independent check that the indexed triplets cover each axis exactly once.
inline bool is_valid_matching(const ThreeDM& x, const Matching& m) {
  if (static_cast<int>(m.triplet_indices.size()) != x.size) return false;
  std::vector<bool> used_x(x.size + 1, false), used_y(x.size + 1, false), used_z(x.size + 1, false);
  for (int idx : m.triplet_indices) {
    if (idx < 0 || idx >= static_cast<int>(x.triplets.size())) return false;
    const auto& t = x.triplets[idx];
    if (used_x[t[0]] || used_y[t[1]] || used_z[t[2]]) return false;
    used_x[t[0]] = used_y[t[1]] = used_z[t[2]] = true;
  }
  return true;
}

/// Backtracking search for a perfect matching. X values are filled in
/// ascending order and candidate triplets tried in input order, so the result
/// is deterministic.
inline std::optional<Matching> solve_3dm(const ThreeDM& x) {
  x.validate();
  if (static_cast<int>(x.triplets.size()) < x.size) return std::nullopt;

  std::vector<std::vector<int>> by_x(x.size + 1);
  for (int i = 0; i < static_cast<int>(x.triplets.size()); ++i) by_x[x.triplets[i][0]].push_back(i);
  for (int v = 1; v <= x.size; ++v)
    if (by_x[v].empty()) return std::nullopt;

  std::vector<bool> used_y(x.size + 1, false), used_z(x.size + 1, false);
  std::vector<int> picked;
  picked.reserve(x.size);

  auto search = [&](auto&& self, int v) -> bool {
    if (v > x.size) return true;
    for (int idx : by_x[v]) {
      const auto& t = x.triplets[idx];
      if (used_y[t[1]] || used_z[t[2]]) continue;
      used_y[t[1]] = used_z[t[2]] = true;
      picked.push_back(idx);
      if (self(self, v + 1)) return true;
      picked.pop_back();
      used_y[t[1]] = used_z[t[2]] = false;
    }
    return false;
  };
  if (!search(search, 1)) return std::nullopt;

  Matching m;
  m.triplet_indices = picked;
  std::sort(m.triplet_indices.begin(), m.triplet_indices.end());
  return m;
}

namespace detail {

// Append extra_triplets draws from the unused candidates accepted by `allow`.
// Sampling from the explicit pool keeps the generators deterministic and
// makes "not enough distinct triplets" an immediate, honest error.
template <class Allow>
void append_extras(std::mt19937_64& rng, int size, int extra_triplets,
                   std::set<std::array<int, 3>>& seen, std::vector<std::array<int, 3>>& out,
                   Allow allow) {
  std::vector<std::array<int, 3>> pool;
  for (int vx = 1; vx <= size; ++vx)
    for (int vy = 1; vy <= size; ++vy)
      for (int vz = 1; vz <= size; ++vz) {
        const std::array<int, 3> t = {vx, vy, vz};
        if (allow(t) && seen.find(t) == seen.end()) pool.push_back(t);
      }
  if (static_cast<int>(pool.size()) < extra_triplets)
    throw std::invalid_argument("3DM generator: not enough distinct triplets for the requested extras");
  std::shuffle(pool.begin(), pool.end(), rng);
  for (int i = 0; i < extra_triplets; ++i) {
    seen.insert(pool[i]);
    out.push_back(pool[i]);
  }
}

}  // namespace detail

/// Random instance guaranteed to contain a perfect matching: one triplet per
/// X value through random Y and Z permutations, plus decoy triplets. The
/// result is certified with solve_3dm before being returned.
inline ThreeDM generate_planted(int size, int extra_triplets, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("generate_planted: size must be >= 1");
  if (extra_triplets < 0) throw std::invalid_argument("generate_planted: extra_triplets must be >= 0");

  std::mt19937_64 rng(seed);
  std::vector<int> sigma_y(size), sigma_z(size);
  for (int i = 0; i < size; ++i) sigma_y[i] = sigma_z[i] = i + 1;
  std::shuffle(sigma_y.begin(), sigma_y.end(), rng);
  std::shuffle(sigma_z.begin(), sigma_z.end(), rng);

  ThreeDM x;
  x.size = size;
  std::set<std::array<int, 3>> seen;
  for (int v = 1; v <= size; ++v) {
    std::array<int, 3> t = {v, sigma_y[v - 1], sigma_z[v - 1]};
    seen.insert(t);
    x.triplets.push_back(t);
  }
  detail::append_extras(rng, size, extra_triplets, seen, x.triplets, [](const auto&) { return true; });
  std::shuffle(x.triplets.begin(), x.triplets.end(), rng);

  x.validate();
  if (!solve_3dm(x)) throw std::logic_error("generate_planted: certification failed");
  return x;
}

/// Random instance with no perfect matching: two X values share a single Y
/// value across all of their triplets, so they can never be matched
/// simultaneously. Requires size >= 2. Certified with solve_3dm.
inline ThreeDM generate_matching_free(int size, int extra_triplets, std::uint64_t seed) {
  if (size < 2) throw std::invalid_argument("generate_matching_free: size must be >= 2");
  if (extra_triplets < 0) throw std::invalid_argument("generate_matching_free: extra_triplets must be >= 0");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(1, size);
  const int starved_a = coord(rng);
  int starved_b = coord(rng);
  while (starved_b == starved_a) starved_b = coord(rng);
  const int shared_y = coord(rng);

  const auto allow = [&](const std::array<int, 3>& t) {
    return (t[0] != starved_a && t[0] != starved_b) || t[1] == shared_y;
  };

  ThreeDM x;
  x.size = size;
  std::set<std::array<int, 3>> seen;
  for (int v = 1; v <= size; ++v) {
    // Distinct x per base triplet, so no duplicate is possible here.
    const bool starved = v == starved_a || v == starved_b;
    const std::array<int, 3> t = {v, starved ? shared_y : coord(rng), coord(rng)};
    seen.insert(t);
    x.triplets.push_back(t);
  }
  detail::append_extras(rng, size, extra_triplets, seen, x.triplets, allow);
  std::shuffle(x.triplets.begin(), x.triplets.end(), rng);

  x.validate();
  if (solve_3dm(x)) throw std::logic_error("generate_matching_free: certification failed");
  return x;
}

}  // namespace mcnoma
