#pragma once

#include <cstddef>
#include <optional>

namespace sensefit {

// Precision over answered items, recall over all items, F1 their harmonic
// mean. Undefined ratios are nullopt; with items but no answers, F1 is 0.
struct Prf {
  std::size_t total = 0;
  std::size_t answered = 0;
  std::size_t correct = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  void add(bool answered_item, bool correct_item) {
    ++total;
    answered += answered_item;
    correct += correct_item;
  }
};

inline Prf finalize(Prf p) {
  p.precision.reset();
  p.recall.reset();
  p.f1.reset();
  if (p.total == 0) return p;
  p.recall = double(p.correct) / double(p.total);
  if (p.answered == 0) {
    p.f1 = 0.0;
    return p;
  }
  p.precision = double(p.correct) / double(p.answered);
  // 2PR/(P+R) reduces to 2c/(a+t); one division keeps it correctly rounded.
  p.f1 = 2.0 * double(p.correct) / double(p.answered + p.total);
  return p;
}

inline Prf make_prf(std::size_t total, std::size_t answered, std::size_t correct) {
  Prf p;
  p.total = total;
  p.answered = answered;
  p.correct = correct;
  return finalize(p);
}

}  // namespace sensefit
