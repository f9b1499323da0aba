#pragma once

#include <stdexcept>
#include <string>

namespace dermkit {

// Shape inconsistency detected while propagating through a network.
// `layer` is the index of the offending layer, or -1 for the input.
class ShapeError : public std::runtime_error {
 public:
  ShapeError(int layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(int layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// lesion_index was asked to average over an empty mask.
class NoLesionFound : public std::runtime_error {
 public:
  NoLesionFound() : std::runtime_error("no lesion found") {}
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dermkit
