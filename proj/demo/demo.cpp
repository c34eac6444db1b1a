// Learns weights for the two-ranker toy panel and for a small synthetic
// dataset, and prints what each optimiser finds.

#include <iomanip>
#include <iostream>

#include "genm/genm.hpp"

namespace {

genm::Dataset toy() {
  Eigen::MatrixXd s(3, 2);
  s << 0.35, 0.2,
       0.4, 0.1,
       0.25, 0.7;
  return genm::Dataset({genm::ScorePanel("q1", {"d1", "d2", "d3"}, s)}, {{"q1", {"d2", "d3"}}}, {"r1", "r2"});
}

void show(const char* label, const genm::Dataset& data, const genm::FitResult& fit) {
  std::cout << std::setw(8) << label << "  w = [" << fit.best_weights.transpose() << "]  MAP = " << fit.final_map
            << "  (single rankers:";
  for (std::size_t k = 0; k < data.num_rankers(); ++k) {
    std::cout << ' ' << genm::map_exact(data, genm::Weights::Unit(static_cast<Eigen::Index>(data.num_rankers()),
                                                                  static_cast<Eigen::Index>(k)));
  }
  std::cout << ")\n";
}

}  // namespace

int main() {
  std::cout << std::setprecision(4);
  const auto t = toy();
  std::cout << "toy panel, uniform fusion MAP = " << genm::map_exact(t, genm::Weights::Constant(2, 0.5)) << '\n';
  show("batch", t, genm::fit_batch(t, {}));

  genm::SynthParams p;
  p.seed = 3;
  const auto syn = genm::synth_generate(p);
  std::cout << "\nsynthetic K=3 L=50 N=100, planted MAP = " << genm::map_exact(syn.dataset, syn.planted) << '\n';
  show("batch", syn.dataset, genm::fit_batch(syn.dataset, {}));
  show("online", syn.dataset, genm::fit_online(syn.dataset, {}));
}
