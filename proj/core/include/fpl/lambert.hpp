#pragma once

namespace fpl {

// Branches of the Lambert W function (inverse of w -> w e^w).
enum class WBranch { principal, lower };

// W(z) by Halley iteration from a branch-specific initial guess.
// principal: z >= -1/e; lower: -1/e <= z < 0. Residual |W e^W - z| is
// driven below 1e-12 relative to |z|. Raises OutOfDomain outside the branch
// domain.
double lambert_w(double z, WBranch branch = WBranch::principal);

}  // namespace fpl
