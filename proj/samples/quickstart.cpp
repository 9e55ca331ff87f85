// Tiny end-to-end run: fit sense vectors for "bank", then disambiguate two
// sentences with the three-vector method.
#include <iostream>

#include "sensefit/sense_fitting.hpp"
#include "sensefit/wsd.hpp"

using namespace sensefit;

int main() {
  EmbeddingStore words(4);
  words.add("bank", Vector{0.6, 0.6, 0.1, 0.1});
  words.add("money", Vector{1.0, 0.1, 0.0, 0.1});
  words.add("finance", Vector{0.9, 0.0, 0.2, 0.0});
  words.add("deposit", Vector{0.8, 0.2, 0.1, 0.0});
  words.add("institution", Vector{0.7, 0.1, 0.3, 0.1});
  words.add("river", Vector{0.0, 1.0, 0.1, 0.2});
  words.add("shore", Vector{0.1, 0.9, 0.0, 0.3});
  words.add("water", Vector{0.0, 0.8, 0.1, 0.4});
  words.add("fish", Vector{0.1, 0.7, 0.0, 0.6});
  words.add("lender", Vector{0.8, 0.0, 0.4, 0.0});
  words.add("slope", Vector{0.1, 0.6, 0.5, 0.2});

  SenseInventory inv;
  const SenseID bank1{"bank", Pos::noun, 1}, bank2{"bank", Pos::noun, 2};
  inv.add_sense({bank1, {"institution", "money", "deposit"}});
  inv.add_sense({bank2, {"slope", "river", "water"}});
  inv.add_sense({{"lender", Pos::noun, 1}, {"money", "finance"}});
  inv.add_sense({{"shore", Pos::noun, 1}, {"water", "river"}});
  inv.add_relation({RelationType::synonym, bank1, SenseID{"lender", Pos::noun, 1}});
  inv.add_relation({RelationType::synonym, bank2, SenseID{"shore", Pos::noun, 1}});
  inv.add_relation({RelationType::antonym, bank1, bank2});

  SenseFitConfig cfg;
  auto fitted = sense_fit(words, inv, default_polarity_map(), cfg);
  std::cout << "fitted " << fitted.store.current.size() << " sense vectors; cos(bank#1, bank#2) = "
            << cosine(*fitted.store.current.lookup(bank1.key()), *fitted.store.current.lookup(bank2.key())) << "\n";

  WSDResources res{&inv, &words, &fitted.store.current};
  WSDConfig wcfg;
  for (const auto& sentence : {std::vector<std::string>{"deposit", "money", "at", "the", "bank"},
                               std::vector<std::string>{"fish", "near", "the", "bank", "of", "the", "river"}}) {
    WSDInstance inst;
    inst.tokens = sentence;
    inst.target_lemma = "bank";
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (sentence[i] == "bank") inst.target_index = i;
    }
    auto sense = disambiguate(inst, res, wcfg);
    for (const auto& t : sentence) std::cout << t << ' ';
    std::cout << "-> " << (sense ? sense->key() : "abstain") << "\n";
  }
  return 0;
}
