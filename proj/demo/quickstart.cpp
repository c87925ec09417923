// Walk through the p = 3 tower: differents, the d-kernel lattice, a decomposition,
// and the w'_2 valuation of a few elements.

#include <iostream>

#include "cyclodiff/cyclodiff.hpp"

using namespace cyclodiff;

int main() {
  Tower t(TowerParams::for_prime(3, 3));
  Differentials d(t);
  Completion c(t);

  for (int n = 0; n <= 3; ++n)
    std::cout << "K_" << n << ": degree " << t.degree(n) << ", val rho_n = " << to_string(t.valuation(t.uniformizer(n)))
              << ", val different over K_0 = " << to_string(d.different(n).val_different) << "\n";

  TowerElement x = t.uniformizer(3).shifted(3);
  std::cout << "d(27 rho_3) is zero: " << std::boolalpha << d.in_kernel(x) << "\n";
  FlatDecomposition dec = d.flat_decompose(x, 2);
  std::cout << "decomposition verified: " << dec.all_verified() << "\n";

  Commensurability cm = commensurability_check(d.theorem_b_lattice(2), d.kernel_lattice(2));
  std::cout << "level 2 lattices: c_plus = " << cm.c_plus << ", c_minus = " << cm.c_minus << "\n";

  for (int m = 1; m <= 3; ++m) {
    TowerElement z = t.zeta(m).shifted(m);
    std::cout << "p^" << m << " zeta: val_p = " << to_string(t.valuation(z)) << ", w'_2 = " << c.w2_valuation(z) << "\n";
  }

  auto margins = c.flatness_test(t.zeta(1), 0);
  std::cout << "margin of zeta_9 at k = 0: " << to_string(*margins[0].margin) << "\n";
}
