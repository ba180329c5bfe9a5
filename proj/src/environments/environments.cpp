#include "mstep/environments/environments.hpp"

#include <algorithm>
#include <numeric>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/core/rng.hpp"
#include "mstep/oracle/trajectory_tree.hpp"

namespace mstep {
namespace {

void attach_decoder(Pomdp& p) {
  auto verdict = verify_decodability(p, p.memory);
  if (!verdict.decodable) throw ModelError("construction is not decodable at its memory");
  p.decoder = std::move(verdict.decoder);
}

void point_mass(std::span<double> row, int index) {
  std::fill(row.begin(), row.end(), 0.0);
  row[index] = 1.0;
}

}  // namespace

int lock_special_action(int h, int action_count) { return h % action_count; }

Pomdp make_combination_lock(int m, int action_count) {
  if (m < 2) throw ModelError("combination lock needs m >= 2");
  if (action_count < 2) throw ModelError("combination lock needs A >= 2");
  constexpr int kGoodState = 0, kBadState = 1;
  const int H = m + 1;
  Pomdp p = Pomdp::shaped(H, m, 2, 3, action_count);
  p.initial[kGoodState] = 1.0;
  for (int h = 1; h < H; ++h) {
    for (int a = 0; a < action_count; ++a) {
      const bool open = h == m || a == lock_special_action(h, action_count);
      point_mass(p.transition(h, kGoodState, a), open ? kGoodState : kBadState);
      point_mass(p.transition(h, kBadState, a), kBadState);
    }
  }
  for (int h = 1; h <= H; ++h) {
    point_mass(p.emission(h, kGoodState), h == H ? LockObservations::kGood : LockObservations::kDummy);
    point_mass(p.emission(h, kBadState), h == H ? LockObservations::kBad : LockObservations::kDummy);
  }
  p.reward(H, LockObservations::kGood) = 1.0;
  p.validate();
  attach_decoder(p);
  return p;
}

std::vector<std::vector<int>> sylvester_hadamard(int s) {
  if (s < 0 || s > 20) throw ModelError("Hadamard exponent out of range");
  std::vector<std::vector<int>> h{{1}};
  for (int k = 0; k < s; ++k) {
    const std::size_t n = h.size();
    std::vector<std::vector<int>> next(2 * n, std::vector<int>(2 * n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        next[i][j] = h[i][j];
        next[i][j + n] = h[i][j];
        next[i + n][j] = h[i][j];
        next[i + n][j + n] = -h[i][j];
      }
    h = std::move(next);
  }
  return h;
}

HadamardInstance make_hadamard_instance(int s) {
  if (s < 2) throw ModelError("Hadamard instance needs s >= 2");
  HadamardInstance inst;
  const int O = 1 << s;
  inst.contexts = O;
  const auto H = sylvester_hadamard(s);
  // Columns of a Sylvester matrix equal its rows (it is symmetric).
  inst.vectors = H;
  for (int i = 1; i < O; ++i) {
    std::vector<int> set;
    for (int k = 0; k < O; ++k)
      if (H[i][k] == 1) set.push_back(k);
    inst.sets.push_back(std::move(set));
  }

  for (int i = 1; i < O; ++i) {
    const int dot0 = std::inner_product(H[i].begin(), H[i].end(), H[0].begin(), 0);
    if (dot0 != 0) throw ModelError("Hadamard vector not orthogonal to v_0");
    if (static_cast<int>(inst.sets[i - 1].size()) != O / 2) {
      throw ModelError("Hadamard set has the wrong size");
    }
    for (int j = 1; j < O; ++j) {
      if (i == j) continue;
      int signed_sum = 0, both = 0, only_i = 0;
      for (int k = 0; k < O; ++k) {
        if (H[i][k] != 1) continue;
        signed_sum += H[j][k];
        both += H[j][k] == 1;
        only_i += H[j][k] != 1;
      }
      if (signed_sum != 0 || both != O / 4 || only_i != O / 4) {
        throw ModelError("Hadamard set system violates the intersection property");
      }
    }
  }

  Pomdp& p = inst.pomdp;
  p = Pomdp::shaped(3, 2, 3, O + 3, 2);
  const int bottom = inst.bottom();
  p.initial[0] = 1.0;
  for (int st = 0; st < 3; ++st)
    for (int a = 0; a < 2; ++a) {
      point_mass(p.transition(1, st, a), st == 0 ? 1 + a : st);
      point_mass(p.transition(2, st, a), st);
    }
  for (int o = 0; o < O; ++o) p.emission(1, 0)[o] = 1.0 / O;
  point_mass(p.emission(1, 1), bottom);
  point_mass(p.emission(1, 2), bottom);
  for (int st = 0; st < 3; ++st) point_mass(p.emission(2, st), bottom);
  point_mass(p.emission(3, 0), inst.terminal_low());
  point_mass(p.emission(3, 1), inst.terminal_low());
  point_mass(p.emission(3, 2), inst.terminal_high());
  p.reward(3, inst.terminal_low()) = 0.5;
  p.reward(3, inst.terminal_high()) = 0.75;
  p.validate();
  attach_decoder(p);

  const SuffixSpace space = p.suffix_space();
  for (int i = 1; i < O; ++i) {
    QFunction f = QFunction::zeros(space);
    const auto& set = inst.sets[i - 1];
    for (int o = 0; o < O; ++o) {
      const double in = std::binary_search(set.begin(), set.end(), o) ? 1.0 : 0.0;
      const SuffixCode z1 = static_cast<SuffixCode>(o);
      f.at(1, z1, 0) = in;
      f.at(1, z1, 1) = 0.75;
      for (int a = 0; a < 2; ++a) {
        const SuffixCode z2 = space.shift(1, z1, a, bottom);
        f.at(2, z2, 0) = a == 0 ? in : 0.75;
        f.at(2, z2, 1) = a == 0 ? in : 0.75;
      }
    }
    inst.f.push_back(std::move(f));
  }

  const ModelOracle oracle(p);
  std::vector<QFunction> F{oracle.qstar()};
  std::vector<std::string> names{"qstar"};
  for (int i = 1; i < O; ++i) {
    F.push_back(inst.f[i - 1]);
    names.push_back("f" + std::to_string(i));
  }
  inst.classes = oracle.make_class_pair(std::move(F), std::move(names));
  return inst;
}

Pomdp make_random_decodable(int S, int O, int A, int H, int m, std::uint64_t seed,
                            int max_retries) {
  if (S < 1 || O < 1 || A < 1 || H < 1 || m < 1 || m > H) {
    throw ModelError("invalid random instance sizes");
  }
  if (max_retries < 1) throw ModelError("max_retries must be positive");
  auto fill_sparse = [](std::span<double> row, Rng& rng) {
    const int n = static_cast<int>(row.size());
    const int support = 1 + rng.uniform_int(std::min(2, n));
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < support; ++i) std::swap(ids[i], ids[i + rng.uniform_int(n - i)]);
    std::fill(row.begin(), row.end(), 0.0);
    double total = 0.0;
    for (int i = 0; i < support; ++i) {
      row[ids[i]] = 1 + rng.uniform_int(4);
      total += row[ids[i]];
    }
    for (double& v : row) v /= total;
  };
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    Pomdp p = Pomdp::shaped(H, m, S, O, A);
    fill_sparse(p.initial, rng);
    for (int h = 1; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) fill_sparse(p.transition(h, s, a), rng);
    for (int h = 1; h <= H; ++h)
      for (int s = 0; s < S; ++s) fill_sparse(p.emission(h, s), rng);
    for (double& r : p.rewards) r = rng.uniform_int(5) / (4.0 * H);
    if (std::abs(std::accumulate(p.initial.begin(), p.initial.end(), 0.0) - 1.0) > 1e-12) continue;
    try {
      p.validate();
    } catch (const ModelError&) {
      continue;
    }
    try {
      auto verdict = verify_decodability(p, m);
      if (!verdict.decodable) continue;
      if (m >= 2 && verify_decodability(p, m - 1).decodable) continue;
      const UniformPolicy uniform(A);
      TrajectoryTree tree(p, uniform);
      tree.advance_to(H);
      p.decoder = std::move(verdict.decoder);
    } catch (const CapExceeded&) {
      continue;
    }
    return p;
  }
  throw ModelError("random decodable instance not found after " + std::to_string(max_retries) +
                   " retries");
}

FunctionClassPair make_decoy_class(const ModelOracle& oracle, int decoys, std::uint64_t seed) {
  if (decoys < 0) throw ModelError("decoy count must be non-negative");
  const QFunction& qstar = oracle.qstar();
  const SuffixSpace& space = oracle.space();
  const int H = space.horizon(), A = space.action_count();
  Rng rng(seed);
  std::vector<QFunction> F;
  std::vector<std::string> names;
  for (int k = 0; k < decoys; ++k) {
    QFunction f = qstar;
    switch (k % 3) {
      case 0:
        for (int h = 1; h < H; ++h) std::fill(f.layer(h).begin(), f.layer(h).end(), 1.0);
        names.push_back("optimistic" + std::to_string(k));
        break;
      case 1:
        for (int h = 1; h <= H; ++h)
          for (SuffixCode z = 0; z < space.size(h); ++z)
            for (int a = 0; a < A; ++a)
              f.at(h, z, a) = qstar.value(h, z, (a + 1 + k / 3) % A);
        names.push_back("permuted" + std::to_string(k));
        break;
      default:
        for (int h = 1; h <= H; ++h)
          for (double& v : f.layer(h))
            if (rng.uniform() < 0.5) v = rng.uniform_int(9) / 8.0;
        names.push_back("corrupted" + std::to_string(k));
        break;
    }
    F.push_back(std::move(f));
  }
  F.push_back(qstar);
  names.push_back("qstar");
  return oracle.make_class_pair(std::move(F), std::move(names));
}

}  // namespace mstep
