#include "ttbell/tuples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "ttbell/rng.hpp"

namespace ttbell {

namespace {
constexpr double kExactTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Arr4 = std::array<double, kNumSettingsPairs>;

nlohmann::json arr_json(const Arr4& a) {
  return nlohmann::json{a[0], a[1], a[2], a[3]};
}

Arr4 arr_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 4) {
    throw std::runtime_error(std::string("function tuple: field '") + key +
                             "' must be a 4-element array");
  }
  Arr4 out{};
  for (int i = 0; i < 4; ++i) out[i] = j[key][i].get<double>();
  return out;
}
}  // namespace

void ExactConstantTuple::validate(const char* who) const {
  const double sum = c[kPair21] + c[kPair11] + c[kPair12];
  if (std::abs(c[kPair22] - sum) > kExactTol) {
    throw std::invalid_argument(std::string(who) +
                                ": constants are not exact (22 component must "
                                "equal the sum of the other three)");
  }
}

LinearEdgeWindowParams LinearEdgeWindowParams::symmetric(double t, double m) {
  LinearEdgeWindowParams p;
  p.t_h = {t, t, t, 3.0 * t};
  for (int i = 0; i < 4; ++i) p.t_l[i] = -p.t_h[i];
  p.m_l = p.m_h = m;
  return p;
}

void LinearEdgeWindowParams::validate() const {
  if (!(m_l > 0.0) || !(m_h > 0.0)) {
    throw std::invalid_argument("linear edge window: slopes must be positive");
  }
  for (int i = 0; i < 4; ++i) {
    if (t_l[i] > t_h[i]) {
      throw std::invalid_argument(
          "linear edge window: lower threshold exceeds upper threshold");
    }
  }
  ExactConstantTuple{t_l}.validate("linear edge window (lower thresholds)");
  ExactConstantTuple{t_h}.validate("linear edge window (upper thresholds)");
}

namespace detail {

struct TupleNode {
  virtual ~TupleNode() = default;
  virtual double eval(int ab, double x) const = 0;
  virtual bool nonneg() const = 0;
  virtual bool mono22() const = 0;
  // Smallest u with f_ab(x) >= level outside [-u, u] for all ab (conservative).
  virtual double radius(double level) const = 0;
  virtual void kinks(int ab, std::vector<double>& out) const = 0;
  virtual nlohmann::json json() const = 0;
};

namespace {

using Ptr = std::shared_ptr<const TupleNode>;

struct LinearNode final : TupleNode {
  double lambda;
  explicit LinearNode(double l) : lambda(l) {}
  double eval(int, double x) const override { return lambda * x; }
  bool nonneg() const override { return lambda == 0.0; }
  bool mono22() const override { return lambda >= 0.0; }
  double radius(double level) const override {
    return level <= 0.0 && lambda == 0.0 ? 0.0 : kInf;
  }
  void kinks(int, std::vector<double>&) const override {}
  nlohmann::json json() const override {
    return {{"kind", "linear"}, {"lambda", lambda}};
  }
};

struct ConstantNode final : TupleNode {
  Arr4 c;
  explicit ConstantNode(const Arr4& v) : c(v) {}
  double eval(int ab, double) const override { return c[ab]; }
  bool nonneg() const override {
    return *std::min_element(c.begin(), c.end()) >= 0.0;
  }
  bool mono22() const override { return true; }
  double radius(double level) const override {
    return *std::min_element(c.begin(), c.end()) >= level ? 0.0 : kInf;
  }
  void kinks(int, std::vector<double>&) const override {}
  nlohmann::json json() const override {
    return {{"kind", "constant"}, {"c", arr_json(c)}};
  }
};

struct StepNode final : TupleNode {
  double eval(int, double x) const override { return x >= 0.0 ? 1.0 : 0.0; }
  bool nonneg() const override { return true; }
  bool mono22() const override { return true; }
  double radius(double level) const override {
    return level <= 0.0 ? 0.0 : kInf;
  }
  void kinks(int, std::vector<double>& out) const override {
    out.push_back(0.0);
  }
  nlohmann::json json() const override { return {{"kind", "step"}}; }
};

struct AbsNode final : TupleNode {
  double eval(int, double x) const override { return std::abs(x); }
  bool nonneg() const override { return true; }
  bool mono22() const override { return false; }
  double radius(double level) const override { return std::max(level, 0.0); }
  void kinks(int, std::vector<double>& out) const override {
    out.push_back(0.0);
  }
  nlohmann::json json() const override { return {{"kind", "abs"}}; }
};

struct ThresholdNode final : TupleNode {
  Arr4 t;
  explicit ThresholdNode(const Arr4& v) : t(v) {}
  double eval(int ab, double x) const override {
    return x >= t[ab] ? 1.0 : 0.0;
  }
  bool nonneg() const override { return true; }
  bool mono22() const override { return true; }
  double radius(double level) const override {
    return level <= 0.0 ? 0.0 : kInf;
  }
  void kinks(int ab, std::vector<double>& out) const override {
    out.push_back(t[ab]);
  }
  nlohmann::json json() const override {
    return {{"kind", "threshold"}, {"t", arr_json(t)}};
  }
};

struct HalfLinearNode final : TupleNode {
  double m;
  Arr4 t, c;
  HalfLinearNode(double slope, const Arr4& tt, const Arr4& cc)
      : m(slope), t(tt), c(cc) {}
  double eval(int ab, double x) const override {
    return std::max(m * (x - t[ab]), c[ab]);
  }
  bool nonneg() const override {
    return *std::min_element(c.begin(), c.end()) >= 0.0;
  }
  bool mono22() const override { return true; }
  double radius(double level) const override {
    return *std::min_element(c.begin(), c.end()) >= level ? 0.0 : kInf;
  }
  void kinks(int ab, std::vector<double>& out) const override {
    out.push_back(t[ab] + c[ab] / m);
  }
  nlohmann::json json() const override {
    return {{"kind", "half_linear"},
            {"m", m},
            {"t", arr_json(t)},
            {"c", arr_json(c)}};
  }
};

struct LinearEdgeWindowNode final : TupleNode {
  LinearEdgeWindowParams p;
  explicit LinearEdgeWindowNode(const LinearEdgeWindowParams& q) : p(q) {}
  double eval(int ab, double x) const override {
    const double rise = p.m_h * (x - p.t_h[ab]);
    const double fall = p.m_l * (p.t_l[ab] - x);
    return std::min(1.0, std::max({0.0, rise, fall}));
  }
  bool nonneg() const override { return true; }
  bool mono22() const override { return false; }
  double radius(double level) const override {
    if (level <= 0.0) return 0.0;
    if (level > 1.0) return kInf;
    double u = 0.0;
    for (int ab = 0; ab < 4; ++ab) {
      u = std::max(u, p.t_h[ab] + level / p.m_h);
      u = std::max(u, -p.t_l[ab] + level / p.m_l);
    }
    return std::max(u, 0.0);
  }
  void kinks(int ab, std::vector<double>& out) const override {
    out.push_back(p.t_l[ab]);
    out.push_back(p.t_h[ab]);
    out.push_back(p.t_l[ab] - 1.0 / p.m_l);
    out.push_back(p.t_h[ab] + 1.0 / p.m_h);
  }
  nlohmann::json json() const override {
    return {{"kind", "linear_edge_window"},
            {"tl", arr_json(p.t_l)},
            {"th", arr_json(p.t_h)},
            {"ml", p.m_l},
            {"mh", p.m_h}};
  }
};

struct HardWindowNode final : TupleNode {
  Arr4 w;
  bool checked;
  HardWindowNode(const Arr4& v, bool ok) : w(v), checked(ok) {}
  double eval(int ab, double x) const override {
    return std::abs(x) > w[ab] ? 1.0 : 0.0;
  }
  bool nonneg() const override { return true; }
  bool mono22() const override { return false; }
  double radius(double level) const override {
    if (level <= 0.0) return 0.0;
    if (level > 1.0) return kInf;
    return *std::max_element(w.begin(), w.end());
  }
  void kinks(int ab, std::vector<double>& out) const override {
    out.push_back(-w[ab]);
    out.push_back(w[ab]);
  }
  nlohmann::json json() const override {
    return {{"kind", "hard_window"}, {"w", arr_json(w)}, {"checked", checked}};
  }
};

struct AddNode final : TupleNode {
  Ptr l, r;
  AddNode(Ptr a, Ptr b) : l(std::move(a)), r(std::move(b)) {}
  double eval(int ab, double x) const override {
    return l->eval(ab, x) + r->eval(ab, x);
  }
  bool nonneg() const override { return l->nonneg() && r->nonneg(); }
  bool mono22() const override { return l->mono22() && r->mono22(); }
  double radius(double level) const override {
    double u = kInf;
    if (r->nonneg()) u = std::min(u, l->radius(level));
    if (l->nonneg()) u = std::min(u, r->radius(level));
    return u;
  }
  void kinks(int ab, std::vector<double>& out) const override {
    l->kinks(ab, out);
    r->kinks(ab, out);
  }
  nlohmann::json json() const override {
    return {{"kind", "add"}, {"a", l->json()}, {"b", r->json()}};
  }
};

struct ScaleNode final : TupleNode {
  Ptr child;
  double s;
  ScaleNode(Ptr a, double v) : child(std::move(a)), s(v) {}
  double eval(int ab, double x) const override {
    return s * child->eval(ab, x);
  }
  bool nonneg() const override { return child->nonneg(); }
  bool mono22() const override { return child->mono22(); }
  double radius(double level) const override {
    return child->radius(level / s);
  }
  void kinks(int ab, std::vector<double>& out) const override {
    child->kinks(ab, out);
  }
  nlohmann::json json() const override {
    return {{"kind", "scale"}, {"s", s}, {"a", child->json()}};
  }
};

struct ReflectNode final : TupleNode {
  Ptr child;
  explicit ReflectNode(Ptr a) : child(std::move(a)) {}
  double eval(int ab, double x) const override { return child->eval(ab, -x); }
  bool nonneg() const override { return child->nonneg(); }
  bool mono22() const override { return false; }
  double radius(double level) const override { return child->radius(level); }
  void kinks(int ab, std::vector<double>& out) const override {
    std::vector<double> inner;
    child->kinks(ab, inner);
    for (double k : inner) out.push_back(-k);
  }
  nlohmann::json json() const override {
    return {{"kind", "reflect"}, {"a", child->json()}};
  }
};

struct MaxNode final : TupleNode {
  Ptr l, r;
  MaxNode(Ptr a, Ptr b) : l(std::move(a)), r(std::move(b)) {}
  double eval(int ab, double x) const override {
    return std::max(l->eval(ab, x), r->eval(ab, x));
  }
  bool nonneg() const override { return l->nonneg() || r->nonneg(); }
  bool mono22() const override { return l->mono22() && r->mono22(); }
  double radius(double level) const override {
    return std::min(l->radius(level), r->radius(level));
  }
  void kinks(int ab, std::vector<double>& out) const override {
    l->kinks(ab, out);
    r->kinks(ab, out);
  }
  nlohmann::json json() const override {
    return {{"kind", "max"}, {"a", l->json()}, {"b", r->json()}};
  }
};

struct ShiftNode final : TupleNode {
  Ptr child;
  Arr4 t;
  ShiftNode(Ptr a, const Arr4& v) : child(std::move(a)), t(v) {}
  double eval(int ab, double x) const override {
    return child->eval(ab, x + t[ab]);
  }
  bool nonneg() const override { return child->nonneg(); }
  bool mono22() const override { return child->mono22(); }
  double radius(double level) const override {
    double tmax = 0.0;
    for (double v : t) tmax = std::max(tmax, std::abs(v));
    return child->radius(level) + tmax;
  }
  void kinks(int ab, std::vector<double>& out) const override {
    std::vector<double> inner;
    child->kinks(ab, inner);
    for (double k : inner) out.push_back(k - t[ab]);
  }
  nlohmann::json json() const override {
    return {{"kind", "shift"}, {"t", arr_json(t)}, {"a", child->json()}};
  }
};

struct ClampNode final : TupleNode {
  Ptr child;
  double c;
  ClampNode(Ptr a, double v) : child(std::move(a)), c(v) {}
  double eval(int ab, double x) const override {
    return std::min(child->eval(ab, x), c);
  }
  bool nonneg() const override { return true; }  // requires child >= 0, c >= 0
  bool mono22() const override { return child->mono22(); }
  double radius(double level) const override {
    return level <= c ? child->radius(level) : kInf;
  }
  void kinks(int ab, std::vector<double>& out) const override {
    child->kinks(ab, out);
  }
  nlohmann::json json() const override {
    return {{"kind", "clamp"}, {"c", c}, {"a", child->json()}};
  }
};

struct ComposeNode final : TupleNode {
  Ptr outer, inner;
  ComposeNode(Ptr o, Ptr i) : outer(std::move(o)), inner(std::move(i)) {}
  double eval(int ab, double x) const override {
    return outer->eval(ab, inner->eval(ab, x));
  }
  bool nonneg() const override { return outer->nonneg(); }
  bool mono22() const override { return outer->mono22() && inner->mono22(); }
  double radius(double) const override { return kInf; }
  void kinks(int ab, std::vector<double>& out) const override {
    inner->kinks(ab, out);
  }
  nlohmann::json json() const override {
    return {{"kind", "compose"}, {"outer", outer->json()}, {"inner", inner->json()}};
  }
};

}  // namespace
}  // namespace detail

namespace {
std::shared_ptr<const detail::TupleNode> own(const FunctionTuple& f,
                                             const char* who) {
  if (!f.valid()) {
    throw std::invalid_argument(std::string(who) + ": empty function tuple");
  }
  return f.node();
}
}  // namespace

double FunctionTuple::eval(int pair_index, double x) const {
  if (!node_) throw std::logic_error("FunctionTuple::eval: empty tuple");
  if (pair_index < 0 || pair_index >= kNumSettingsPairs) {
    throw std::invalid_argument("FunctionTuple::eval: bad settings pair index");
  }
  return node_->eval(pair_index, x);
}

bool FunctionTuple::nonnegative() const {
  if (!node_) throw std::logic_error("FunctionTuple: empty tuple");
  return node_->nonneg();
}

bool FunctionTuple::monotone_nondecreasing_22() const {
  if (!node_) throw std::logic_error("FunctionTuple: empty tuple");
  return node_->mono22();
}

double FunctionTuple::unit_radius() const {
  if (!node_) throw std::logic_error("FunctionTuple: empty tuple");
  return node_->radius(1.0);
}

std::vector<double> FunctionTuple::breakpoints(int pair_index) const {
  if (!node_) throw std::logic_error("FunctionTuple: empty tuple");
  if (pair_index < 0 || pair_index >= kNumSettingsPairs) {
    throw std::invalid_argument("FunctionTuple::breakpoints: bad pair index");
  }
  std::vector<double> out;
  node_->kinks(pair_index, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FunctionTuple make_linear(double lambda) {
  return FunctionTuple(std::make_shared<detail::LinearNode>(lambda));
}

FunctionTuple make_constant(const ExactConstantTuple& c) {
  c.validate("make_constant");
  return FunctionTuple(std::make_shared<detail::ConstantNode>(c.c));
}

FunctionTuple make_step() {
  return FunctionTuple(std::make_shared<detail::StepNode>());
}

FunctionTuple make_abs() {
  return FunctionTuple(std::make_shared<detail::AbsNode>());
}

FunctionTuple make_threshold(const ExactConstantTuple& t) {
  t.validate("make_threshold");
  return FunctionTuple(std::make_shared<detail::ThresholdNode>(t.c));
}

FunctionTuple make_half_linear(double m, const ExactConstantTuple& t,
                               const ExactConstantTuple& c) {
  if (!(m > 0.0)) {
    throw std::invalid_argument("make_half_linear: slope must be positive");
  }
  t.validate("make_half_linear (thresholds)");
  c.validate("make_half_linear (floors)");
  return FunctionTuple(std::make_shared<detail::HalfLinearNode>(m, t.c, c.c));
}

FunctionTuple make_linear_edge_window(const LinearEdgeWindowParams& p) {
  p.validate();
  return FunctionTuple(std::make_shared<detail::LinearEdgeWindowNode>(p));
}

FunctionTuple make_hard_window(const std::array<double, kNumSettingsPairs>& w) {
  for (double v : w) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("make_hard_window: widths must be >= 0");
    }
  }
  const double sum = w[kPair21] + w[kPair11] + w[kPair12];
  if (w[kPair22] < sum - 1e-12) {
    throw std::invalid_argument(
        "make_hard_window: admissibility requires the 22 width to be at least "
        "the sum of the other three");
  }
  return FunctionTuple(std::make_shared<detail::HardWindowNode>(w, true));
}

FunctionTuple make_hard_window_unchecked(
    const std::array<double, kNumSettingsPairs>& w) {
  for (double v : w) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(
          "make_hard_window_unchecked: widths must be >= 0");
    }
  }
  return FunctionTuple(std::make_shared<detail::HardWindowNode>(w, false));
}

FunctionTuple make_compression(double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("make_compression: lambda must be positive");
  }
  return tuple_clamp(tuple_scale(make_abs(), lambda), 1.0);
}

FunctionTuple tuple_add(const FunctionTuple& a, const FunctionTuple& b) {
  return FunctionTuple(std::make_shared<detail::AddNode>(own(a, "tuple_add"),
                                                         own(b, "tuple_add")));
}

FunctionTuple tuple_scale(const FunctionTuple& a, double s) {
  if (!(s > 0.0)) {
    throw std::invalid_argument("tuple_scale: factor must be positive");
  }
  return FunctionTuple(
      std::make_shared<detail::ScaleNode>(own(a, "tuple_scale"), s));
}

FunctionTuple tuple_reflect(const FunctionTuple& a) {
  return FunctionTuple(
      std::make_shared<detail::ReflectNode>(own(a, "tuple_reflect")));
}

FunctionTuple tuple_max(const FunctionTuple& a, const FunctionTuple& b) {
  return FunctionTuple(std::make_shared<detail::MaxNode>(own(a, "tuple_max"),
                                                         own(b, "tuple_max")));
}

FunctionTuple tuple_shift(const FunctionTuple& a, const ExactConstantTuple& t) {
  t.validate("tuple_shift");
  return FunctionTuple(
      std::make_shared<detail::ShiftNode>(own(a, "tuple_shift"), t.c));
}

FunctionTuple tuple_clamp(const FunctionTuple& a, double c) {
  if (!(c >= 0.0)) {
    throw std::invalid_argument("tuple_clamp: bound must be >= 0");
  }
  if (!a.valid() || !a.nonnegative()) {
    throw std::invalid_argument(
        "tuple_clamp: input tuple must be nonnegative");
  }
  return FunctionTuple(
      std::make_shared<detail::ClampNode>(own(a, "tuple_clamp"), c));
}

FunctionTuple tuple_compose(const FunctionTuple& outer,
                            const FunctionTuple& inner) {
  if (!outer.valid() || !outer.monotone_nondecreasing_22()) {
    throw std::invalid_argument(
        "tuple_compose: outer tuple's 22 component must be monotone "
        "non-decreasing");
  }
  return FunctionTuple(std::make_shared<detail::ComposeNode>(
      own(outer, "tuple_compose"), own(inner, "tuple_compose")));
}

std::string FunctionTuple::to_json_string() const {
  if (!node_) throw std::logic_error("FunctionTuple: empty tuple");
  return node_->json().dump();
}

namespace {
FunctionTuple tuple_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::runtime_error("function tuple: missing 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  auto num = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw std::runtime_error(std::string("function tuple: field '") + key +
                               "' must be a number");
    }
    return j[key].get<double>();
  };
  auto sub = [&](const char* key) {
    if (!j.contains(key)) {
      throw std::runtime_error(std::string("function tuple: missing '") + key +
                               "'");
    }
    return tuple_from_json(j[key]);
  };
  if (kind == "linear") return make_linear(num("lambda"));
  if (kind == "constant") return make_constant({arr_from(j, "c")});
  if (kind == "step") return make_step();
  if (kind == "abs") return make_abs();
  if (kind == "threshold") return make_threshold({arr_from(j, "t")});
  if (kind == "half_linear") {
    return make_half_linear(num("m"), {arr_from(j, "t")}, {arr_from(j, "c")});
  }
  if (kind == "linear_edge_window") {
    LinearEdgeWindowParams p;
    p.t_l = arr_from(j, "tl");
    p.t_h = arr_from(j, "th");
    p.m_l = num("ml");
    p.m_h = num("mh");
    return make_linear_edge_window(p);
  }
  if (kind == "hard_window") {
    const Arr4 w = arr_from(j, "w");
    const bool checked = j.value("checked", true);
    return checked ? make_hard_window(w) : make_hard_window_unchecked(w);
  }
  if (kind == "add") return tuple_add(sub("a"), sub("b"));
  if (kind == "scale") return tuple_scale(sub("a"), num("s"));
  if (kind == "reflect") return tuple_reflect(sub("a"));
  if (kind == "max") return tuple_max(sub("a"), sub("b"));
  if (kind == "shift") return tuple_shift(sub("a"), {arr_from(j, "t")});
  if (kind == "clamp") return tuple_clamp(sub("a"), num("c"));
  if (kind == "compose") return tuple_compose(sub("outer"), sub("inner"));
  throw std::runtime_error("function tuple: unknown kind '" + kind + "'");
}
}  // namespace

FunctionTuple FunctionTuple::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("function tuple: bad JSON: ") +
                             e.what());
  }
  return tuple_from_json(j);
}

T4VerifyResult verify_t4(const FunctionTuple& f, double lo, double hi,
                         std::size_t samples, std::uint64_t seed) {
  if (!f.valid()) {
    throw std::invalid_argument("verify_t4: empty function tuple");
  }
  constexpr double kTol = 1e-9;
  T4VerifyResult res;
  auto check = [&](double x, double y, double z) {
    // The triple sum carries rounding error, so a jump of f_22 exactly at
    // x+y+z must not count as a violation; take the smallest value within an
    // argument slack that dominates that error.
    const double s = x + y + z;
    const double lhs = std::min({f.eval(kPair22, s), f.eval(kPair22, s - 1e-9),
                                 f.eval(kPair22, s + 1e-9)});
    const double rhs =
        f.eval(kPair21, x) + f.eval(kPair11, y) + f.eval(kPair12, z);
    const double gap = lhs - rhs;
    if (gap > kTol && (res.pass || gap > res.violation)) {
      res.pass = false;
      res.x = x;
      res.y = y;
      res.z = z;
      res.violation = gap;
    }
  };

  Rng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    check(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  }

  // Deterministic grid: per-argument breakpoints nudged either way, plus the
  // interval ends and zero.
  auto axis = [&](int ab) {
    std::vector<double> v{lo, hi, 0.0};
    for (double b : f.breakpoints(ab)) {
      v.push_back(b - 1e-6);
      v.push_back(b);
      v.push_back(b + 1e-6);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto xs = axis(kPair21);
  const auto ys = axis(kPair11);
  const auto zs = axis(kPair12);
  const auto b22 = f.breakpoints(kPair22);
  for (double x : xs) {
    for (double y : ys) {
      for (double z : zs) check(x, y, z);
      // Probe z values that land the 22 argument exactly on its kinks.
      for (double b : b22) {
        const double z0 = b - x - y;
        check(x, y, z0 - 1e-6);
        check(x, y, z0);
        check(x, y, z0 + 1e-6);
      }
    }
  }
  return res;
}

}  // namespace ttbell
