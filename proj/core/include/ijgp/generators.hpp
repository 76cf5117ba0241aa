#pragma once

// Seeded generators for the random, grid and coding benchmark families.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ijgp/network.hpp"

namespace ijgp {

// N variables of domain K; the last C variables of a random order get P
// parents drawn from their predecessors, the rest get random priors.
struct RandomNetSpec {
  std::size_t n = 50;
  std::size_t k = 2;
  std::size_t c = 45;
  std::size_t p = 3;
  std::uint64_t seed = 0;
  std::size_t evidence = 0;
};

// M x M lattice; (r,c) has parents (r-1,c) and (r,c-1).
struct GridSpec {
  std::size_t m = 9;
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t evidence = 0;
};

// Rate-1/2 code: k_info information bits, k_info XOR parity bits over
// `parents` information bits each, all sent through a Gaussian channel.
struct CodingSpec {
  std::size_t k_info = 200;
  std::size_t parents = 4;
  double sigma = 0.22;
  std::uint64_t seed = 0;
};

struct GeneratedInstance {
  BeliefNetwork network;
  // Coding only: transmitted bits, indexed by bit variable 0 .. 2*k_info-1.
  std::vector<Value> ground_truth;
  Assignment evidence;
};

GeneratedInstance gen_random(const RandomNetSpec& spec);
GeneratedInstance gen_grid(const GridSpec& spec);
// Variables 0..k_info-1 are information bits, k_info..2k_info-1 parity bits and
// 2k_info..4k_info-1 observation nodes, one per bit, all observed at value 1.
// Each observation CPT carries the channel likelihood of its bit's noisy reading.
GeneratedInstance gen_coding(const CodingSpec& spec);

// One joint sample by ancestral sampling (parents before children).
std::vector<Value> ancestral_sample(const BeliefNetwork& net, std::uint64_t seed);

}  // namespace ijgp
