#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "crnc/crn.hpp"

namespace crnc {

struct OptimizeOptions {
  // Largest product multiset (sum of coefficients) a rewritten reaction may carry.
  std::int64_t product_ceiling = 1024;
  // Called after every single elimination with the intermediate CRN.
  std::function<void(const Crn&, const std::string& eliminated)> on_step;
};

struct OptimizeResult {
  Crn crn;
  std::vector<std::string> eliminated;  // in elimination order
  bool feed_forward_order = false;      // reverse witness order was used
};

// Repeatedly removes an eligible S -> P: S has coefficient 1, is not an input
// or output, is a reactant nowhere else and is not among P. Producers of S get
// P inlined and initial(S) is folded onto P. Throws NotNonCompetitive on a
// competitive CRN and Error when a product multiset exceeds the ceiling.
OptimizeResult optimize(const Crn& crn, const OptimizeOptions& options = {});

Crn eliminate_unimolecular(const Crn& crn, const OptimizeOptions& options = {});

struct CrnCounts {
  std::size_t reactions = 0;
  std::size_t species = 0;
  std::size_t unimolecular = 0;
  std::size_t bimolecular = 0;
  std::int64_t max_products = 0;
};

CrnCounts count_crn(const Crn& crn);

struct OptimizationReport {
  CrnCounts before;
  CrnCounts after;
  double product_growth = 1.0;  // after.max_products / before.max_products
  std::string order_note;

  std::string to_json() const;
};

OptimizationReport count_report(const Crn& before, const Crn& after);

}  // namespace crnc
