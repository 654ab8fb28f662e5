#ifndef STATDG_ERRORS_HPP_
#define STATDG_ERRORS_HPP_

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace statdg {

/// A state left the admissible set of the system (e.g. negative pressure).
class StateSpaceError : public std::runtime_error {
 public:
  StateSpaceError(const std::string &what, std::vector<double> state)
      : std::runtime_error(format(what, state)), state_(std::move(state)) {}

  /// Same error with a location prefix ("stage 2, cell 17: ...").
  StateSpaceError(const std::string &context, const StateSpaceError &inner)
      : std::runtime_error(context + ": " + inner.what()),
        state_(inner.state_) {}

  const std::vector<double> &state() const { return state_; }

 private:
  static std::string format(const std::string &what,
                            const std::vector<double> &state) {
    std::ostringstream os;
    os.precision(17);
    os << what << " at state (";
    for (size_t i = 0; i < state.size(); ++i) {
      if (i) os << ", ";
      os << state[i];
    }
    os << ")";
    return os.str();
  }

  std::vector<double> state_;
};

/// The time integrator produced non-finite data.
class SolverBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace statdg

#endif  // STATDG_ERRORS_HPP_
