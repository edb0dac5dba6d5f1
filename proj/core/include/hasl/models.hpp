#pragma once

// Built-in models and small automata.

#include <map>
#include <string>

#include "hasl/desp.hpp"
#include "hasl/lha.hpp"

namespace hasl {

/// Reaction rates of the circadian oscillator (per hour; bimolecular rates
/// per molecule per hour, unit volume).
struct CircadianRates {
  double alpha_A = 50.0;
  double alpha_A_prime = 500.0;
  double alpha_R = 0.01;
  double alpha_R_prime = 50.0;
  double beta_A = 50.0;
  double beta_R = 5.0;
  double delta_MA = 10.0;
  double delta_MR = 0.5;
  double delta_A = 1.0;
  double delta_R = 0.2;
  double gamma_A = 1.0;
  double gamma_R = 1.0;
  double gamma_C = 2.0;
  double theta_A = 50.0;
  double theta_R = 100.0;

  /// Sets a rate by name (e.g. "delta_R"); throws ModelError on unknown names.
  void set(const std::string& name, double value);
  std::map<std::string, double> as_map() const;
};

/// Places D_A, D'_A, D_R, D'_R, M_A, M_R, A, R, C; transitions R1..R16 with
/// mass-action rates; one copy of each gene, everything else empty.
GspnModel circadian(const CircadianRates& rates = {});

struct GeneExpressionRates {
  double bind = 1.0;
  double unbind = 1.0;
  double transc = 1.0;        // from the free gene
  double transc_bound = 1.0;  // from the activated gene
  double degrade = 1.0;
  double transl = 1.0;

  void set(const std::string& name, double value);
};

/// Places protA, geneA, A_geneA, mrnA with marking (2, 1, 0, 0). transc fires
/// while either gene state is present, at rate
/// transc*geneA + transc_bound*A_geneA.
GspnModel gene_expression(const GeneExpressionRates& rates = {});

/// One place `X` and one exponential transition `fire` that always produces.
GspnModel poisson_source(double rate);

/// Two-location automaton that counts occurrences of `event` and accepts at
/// the N-th one. Variables: t (clock), n (count), a (last value of
/// `observed`, when given).
Lha build_counter(const std::string& event, std::int64_t N, const std::string& observed = {});

}  // namespace hasl
