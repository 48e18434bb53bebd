#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aptsim {

/// Invalid argument outside a function's mathematical domain (omega <= 0, negative thickness, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Impedance-form layer matrix requested where tan(kx) or sin(kx) vanishes.
class LayerResonanceSingularity : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Singular or ill-conditioned stack system.
class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroCurrent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroInputPower : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floating subcircuit, shorted voltage source or other singular MNA system.
class SingularNetwork : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural violation of Network invariants (dangling node, bad ground, ...).
class NetworkInvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonDissipativeOutput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedLossyLayer : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Netlist text that cannot be read; carries the 1-based line number (0 = whole document).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Card outside the netlist dialect written by export_netlist.
class UnknownCard : public ParseError {
public:
    using ParseError::ParseError;
};

/// Configuration error; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace aptsim
