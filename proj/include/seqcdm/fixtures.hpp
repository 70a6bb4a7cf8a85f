#ifndef SEQCDM_FIXTURES_HPP
#define SEQCDM_FIXTURES_HPP

// Bundled Q-matrices. Rows are items, characters are attributes a1..aK.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "seqcdm/errors.hpp"
#include "seqcdm/model.hpp"

namespace seqcdm::fixtures {

inline constexpr std::array<std::string_view, 40> simulation_k3_rows = {
    "100",
    "010",
    "001",
    "100",
    "010",
    "001",
    "110",
    "101",
    "011",
    "110",
    "101",
    "111",
    "111",
    "111",
    "111",
    "111",
    "100",
    "010",
    "001",
    "100",
    "010",
    "001",
    "110",
    "101",
    "011",
    "110",
    "101",
    "111",
    "111",
    "111",
    "111",
    "111",
    "100",
    "010",
    "001",
    "100",
    "010",
    "001",
    "110",
    "101",
};

inline constexpr std::array<std::string_view, 40> simulation_k5_rows = {
    "10000",
    "01000",
    "00100",
    "00010",
    "00001",
    "10000",
    "01000",
    "00100",
    "00010",
    "00001",
    "11000",
    "01100",
    "00110",
    "00011",
    "10001",
    "11100",
    "01110",
    "00111",
    "10011",
    "11001",
    "10000",
    "01000",
    "00100",
    "00010",
    "00001",
    "11000",
    "01100",
    "00110",
    "00011",
    "10001",
    "11100",
    "01110",
    "00111",
    "10011",
    "11001",
    "10000",
    "01000",
    "00100",
    "00010",
    "00001",
};

inline constexpr std::array<std::string_view, 40> simulation_k7_rows = {
    "1000000",
    "0100000",
    "0010000",
    "0001000",
    "0000100",
    "0000010",
    "0000001",
    "1000000",
    "0100000",
    "0010000",
    "0001000",
    "0000100",
    "0000010",
    "0000001",
    "1100000",
    "0110000",
    "0011000",
    "0001100",
    "0000110",
    "1000011",
    "1100001",
    "0011100",
    "0001110",
    "0000111",
    "1000000",
    "0100000",
    "0010000",
    "0001000",
    "0000100",
    "0000010",
    "0000001",
    "1100000",
    "0110000",
    "0011000",
    "0001100",
    "0000110",
    "1000011",
    "1100001",
    "0011100",
    "0001110",
};

inline constexpr std::array<std::string_view, 40> simulation_k15_rows = {
    "100000000000000",
    "010000000000000",
    "001000000000000",
    "000100000000000",
    "000010000000000",
    "000001000000000",
    "000000100000000",
    "000000010000000",
    "000000001000000",
    "000000000100000",
    "000000000010000",
    "000000000001000",
    "000000000000100",
    "000000000000010",
    "000000000000001",
    "100000000000000",
    "010000000000000",
    "001000000000000",
    "000100000000000",
    "000010000000000",
    "000001000000000",
    "000000100000000",
    "000000010000000",
    "000000001000000",
    "000000000100000",
    "000000000010000",
    "000000000001000",
    "000000000000100",
    "000000000000010",
    "000000000000001",
    "110000000000000",
    "001100000000000",
    "000011000000000",
    "000000110000000",
    "000000001100000",
    "111000000000000",
    "000111000000000",
    "000000111000000",
    "000000000111000",
    "000000000000111",
};

inline constexpr std::array<std::string_view, 20> fraction_subtraction_rows = {
    "00010110",
    "00010010",
    "00010010",
    "01101010",
    "01010011",
    "00000010",
    "11000010",
    "00000010",
    "01000000",
    "01001011",
    "01001010",
    "00000011",
    "01011010",
    "01000010",
    "10000010",
    "01000010",
    "01001010",
    "01001110",
    "11101010",
    "01101010",
};

inline constexpr std::array<std::string_view, 25> timss2007_rows = {
    "110000000000000",
    "000010000000000",
    "010110000000000",
    "001001000000000",
    "011000010000000",
    "000000000101000",
    "000000001101000",
    "111000000110000",
    "000000000100000",
    "000000001100000",
    "011100001000000",
    "100000000000101",
    "110100000000100",
    "110011000000110",
    "011000000000000",
    "011000000000000",
    "010000100000000",
    "011000010000000",
    "011000000000010",
    "011000010000010",
    "011000100000000",
    "000000000111000",
    "011000000000000",
    "000000000100000",
    "110000000000101",
};

template <std::size_t J>
QMatrix from_strings(const std::array<std::string_view, J>& rows) {
  std::vector<Bits> bits;
  for (auto row : rows) {
    Bits b;
    for (char ch : row) b.push_back(static_cast<std::uint8_t>(ch - '0'));
    bits.push_back(std::move(b));
  }
  return QMatrix::from_rows(bits);
}

/// 40-item simulation design for K in {3, 5, 7, 15}.
inline QMatrix simulation_q(int K) {
  switch (K) {
    case 3: return from_strings(simulation_k3_rows);
    case 5: return from_strings(simulation_k5_rows);
    case 7: return from_strings(simulation_k7_rows);
    case 15: return from_strings(simulation_k15_rows);
    default: throw ConfigError("no bundled simulation Q-matrix for K = " + std::to_string(K));
  }
}

inline bool has_simulation_q(int K) { return K == 3 || K == 5 || K == 7 || K == 15; }

inline QMatrix fraction_subtraction_q() { return from_strings(fraction_subtraction_rows); }
inline QMatrix timss2007_q() { return from_strings(timss2007_rows); }

/// Lookup by name: simulation_k3, simulation_k5, simulation_k7, simulation_k15,
/// fraction_subtraction, timss2007.
inline QMatrix by_name(const std::string& name) {
  if (name == "simulation_k3") return simulation_q(3);
  if (name == "simulation_k5") return simulation_q(5);
  if (name == "simulation_k7") return simulation_q(7);
  if (name == "simulation_k15") return simulation_q(15);
  if (name == "fraction_subtraction") return fraction_subtraction_q();
  if (name == "timss2007") return timss2007_q();
  throw ConfigError("unknown fixture '" + name + "'");
}

}  // namespace seqcdm::fixtures

#endif  // SEQCDM_FIXTURES_HPP
