#pragma once

#include <string>

#include "cage/basis.hpp"
#include "cage/inference.hpp"

namespace cage {

/// On-disk posterior draws plus the basis they were drawn under.
///
/// Layout under `dir`: draws/{mu,eta,xi,sigma_xi2,q,y_b}.csv (one row per draw,
/// q flattened row-major), basis/{knots,w,transform}.csv and basis/kind.txt.
void write_bundle(const std::string& dir, const PosteriorDraws& draws, const OcBasis& basis);

struct Bundle {
  OcBasis basis;
  PosteriorDraws draws;
};

Bundle read_bundle(const std::string& dir);

}  // namespace cage
