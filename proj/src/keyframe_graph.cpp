#include "oaf/keyframe_graph.hpp"

#include "oaf/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace oaf {

double mean_of(std::span<const float> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (float x : v) s += x;
  return s / static_cast<double>(v.size());
}

Keyframe make_keyframe(std::int64_t id, const Image& image, const RigidTransform& pose,
                       PointmapPrediction metric_pred, double scale) {
  Keyframe kf;
  kf.id = id;
  kf.image = image;
  kf.pose = pose;
  kf.measured_pose = pose;
  kf.width = metric_pred.width;
  kf.height = metric_pred.height;
  kf.feature_dim = metric_pred.feature_dim;
  kf.points = std::move(metric_pred.X_ii);
  kf.conf = std::move(metric_pred.C_i);
  kf.features = std::move(metric_pred.D_i);
  kf.feat_conf = std::move(metric_pred.Q_i);
  kf.mean_conf = mean_of(kf.conf);
  kf.scale = scale;
  return kf;
}

MatchSet filter_matches(const MatchSet& m, std::span<const float> conf_f,
                        std::span<const float> conf_k, std::span<const float> fconf_f,
                        std::span<const float> fconf_k, double tau_c, double tau_q) {
  MatchSet out{m.width, m.height, {}};
  out.pairs.reserve(m.pairs.size());
  for (const Match& mt : m.pairs) {
    const auto f = static_cast<std::size_t>(mt.frame_pixel);
    const auto k = static_cast<std::size_t>(mt.keyframe_pixel);
    if (!(conf_k[k] > tau_c) || !(conf_f[f] > tau_c)) continue;
    const double q = std::sqrt(static_cast<double>(fconf_f[f]) * static_cast<double>(fconf_k[k]));
    if (!(q > tau_q)) continue;
    out.pairs.push_back(mt);
  }
  return out;
}

KeyframeMetrics keyframe_metrics(const MatchSet& filtered, const MatchSet& raw, int height,
                                 int width) {
  const double n = static_cast<double>(height) * width;
  if (n <= 0) return {};
  std::vector<char> seen(static_cast<std::size_t>(height) * width, 0);
  std::size_t unique = 0;
  for (const Match& m : raw.pairs) {
    char& s = seen[static_cast<std::size_t>(m.keyframe_pixel)];
    if (!s) {
      s = 1;
      ++unique;
    }
  }
  return {static_cast<double>(filtered.size()) / n, static_cast<double>(unique) / n};
}

bool should_add_keyframe(double alpha_match, double alpha_unique, double tau_k) {
  return std::min(alpha_match, alpha_unique) < tau_k;
}

KeyframeGraph::KeyframeGraph(PinholeCamera cam, GraphConfig cfg) : cam_(cam), cfg_(cfg) {}

std::optional<std::size_t> KeyframeGraph::index_of(std::int64_t id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

void KeyframeGraph::add_edge(Edge e) {
  if (!index_of(e.a) || !index_of(e.b)) throw Error("add_edge: unknown keyframe id");
  if (!(e.match_fraction > cfg_.tau_f)) throw Error("add_edge: match fraction not above tau_f");
  edges_.push_back(std::move(e));
}

std::size_t KeyframeGraph::add_keyframe_and_edges(Keyframe kf) {
  if (kf.width != cam_.width() || kf.height != cam_.height()) {
    throw Error("add_keyframe: keyframe size does not match the camera");
  }
  if (index_of(kf.id)) throw Error("add_keyframe: duplicate keyframe id");
  const double pixels = static_cast<double>(cam_.pixel_count());
  for (const Keyframe& other : nodes_) {
    const RigidTransform t = other.pose.inverse() * kf.pose;
    const MatchSet raw = match_projective(kf.view(), other.view(), t, cam_, cfg_.match);
    const MatchSet filt =
        filter_matches(raw, kf.conf, other.conf, kf.feat_conf, other.feat_conf, cfg_.tau_c,
                       cfg_.tau_q);
    const double frac = static_cast<double>(filt.size()) / pixels;
    if (!(frac > cfg_.tau_f)) continue;
    Edge e{other.id, kf.id, frac, {}};
    const std::size_t n = filt.size();
    const std::size_t keep = std::min(n, cfg_.max_edge_matches);
    e.matches.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) e.matches.push_back(filt.pairs[i * n / keep]);
    edges_.push_back(std::move(e));
  }
  nodes_.push_back(std::move(kf));
  return nodes_.size() - 1;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<std::vector<std::int64_t>> KeyframeGraph::components() const {
  UnionFind uf(nodes_.size());
  for (const Edge& e : edges_) uf.unite(*index_of(e.a), *index_of(e.b));
  std::vector<std::vector<std::int64_t>> groups(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) groups[uf.find(i)].push_back(nodes_[i].id);
  std::vector<std::vector<std::int64_t>> out;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

std::size_t KeyframeGraph::component_of(std::int64_t id) const {
  const auto comps = components();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (std::binary_search(comps[c].begin(), comps[c].end(), id)) return c;
  }
  throw Error("component_of: unknown keyframe id");
}

namespace {

struct EdgeTerm {
  std::size_t a = 0;  // local variable index
  std::size_t b = 0;
  double weight = 0.0;
  std::vector<Vec3> pa;  // keyframe-a camera points
  std::vector<Vec3> pb;
};

struct Problem {
  std::vector<RigidTransform> measured;
  std::vector<EdgeTerm> terms;
  double w_prior = 0.0;
  double w_scale = 0.0;
};

struct State {
  std::vector<RigidTransform> pose;
  std::vector<double> sigma;
};

struct Cost {
  double total = 0.0;
  double match = 0.0;
};

Cost evaluate(const Problem& pb, const State& st) {
  Cost c;
  for (const EdgeTerm& t : pb.terms) {
    const double sa = std::exp(st.sigma[t.a]);
    const double sb = std::exp(st.sigma[t.b]);
    double e = 0.0;
    for (std::size_t m = 0; m < t.pa.size(); ++m) {
      e += (st.pose[t.a] * (sa * t.pa[m]) - st.pose[t.b] * (sb * t.pb[m])).squaredNorm();
    }
    c.match += t.weight * e;
  }
  c.total = c.match;
  for (std::size_t k = 0; k < st.pose.size(); ++k) {
    const Vec3 rr = log_so3(st.pose[k].rotation() * pb.measured[k].rotation().transpose());
    const Vec3 rt = st.pose[k].translation() - pb.measured[k].translation();
    c.total += pb.w_prior * (rr.squaredNorm() + rt.squaredNorm());
    c.total += pb.w_scale * st.sigma[k] * st.sigma[k];
  }
  return c;
}

void build_normal_equations(const Problem& pb, const State& st, Eigen::MatrixXd& h,
                            Eigen::VectorXd& g) {
  const auto n = static_cast<Eigen::Index>(7 * st.pose.size());
  h.setZero(n, n);
  g.setZero(n);
  using J37 = Eigen::Matrix<double, 3, 7>;
  for (const EdgeTerm& t : pb.terms) {
    const double sa = std::exp(st.sigma[t.a]);
    const double sb = std::exp(st.sigma[t.b]);
    Eigen::Matrix<double, 7, 7> haa = Eigen::Matrix<double, 7, 7>::Zero();
    Eigen::Matrix<double, 7, 7> hab = Eigen::Matrix<double, 7, 7>::Zero();
    Eigen::Matrix<double, 7, 7> hbb = Eigen::Matrix<double, 7, 7>::Zero();
    Eigen::Matrix<double, 7, 1> ga = Eigen::Matrix<double, 7, 1>::Zero();
    Eigen::Matrix<double, 7, 1> gb = Eigen::Matrix<double, 7, 1>::Zero();
    for (std::size_t m = 0; m < t.pa.size(); ++m) {
      const Vec3 ra = st.pose[t.a].rotation() * (sa * t.pa[m]);
      const Vec3 rb = st.pose[t.b].rotation() * (sb * t.pb[m]);
      const Vec3 wa = ra + st.pose[t.a].translation();
      const Vec3 wb = rb + st.pose[t.b].translation();
      const Vec3 r = wa - wb;
      J37 ja;
      ja << -skew(wa), Mat3::Identity(), ra;
      J37 jb;
      jb << skew(wb), -Mat3::Identity(), -rb;
      haa.noalias() += ja.transpose() * ja;
      hab.noalias() += ja.transpose() * jb;
      hbb.noalias() += jb.transpose() * jb;
      ga.noalias() += ja.transpose() * r;
      gb.noalias() += jb.transpose() * r;
    }
    const auto ia = static_cast<Eigen::Index>(7 * t.a);
    const auto ib = static_cast<Eigen::Index>(7 * t.b);
    h.block<7, 7>(ia, ia) += t.weight * haa;
    h.block<7, 7>(ia, ib) += t.weight * hab;
    h.block<7, 7>(ib, ia) += t.weight * hab.transpose();
    h.block<7, 7>(ib, ib) += t.weight * hbb;
    g.segment<7>(ia) += t.weight * ga;
    g.segment<7>(ib) += t.weight * gb;
  }
  for (std::size_t k = 0; k < st.pose.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(7 * k);
    const Vec3 rr = log_so3(st.pose[k].rotation() * pb.measured[k].rotation().transpose());
    const Vec3 rt = st.pose[k].translation() - pb.measured[k].translation();
    Eigen::Matrix<double, 6, 6> j = Eigen::Matrix<double, 6, 6>::Zero();
    j.block<3, 3>(0, 0) = Mat3::Identity();
    j.block<3, 3>(3, 0) = -skew(st.pose[k].translation());
    j.block<3, 3>(3, 3) = Mat3::Identity();
    Vec6 r;
    r << rr, rt;
    h.block<6, 6>(i, i) += pb.w_prior * j.transpose() * j;
    g.segment<6>(i) += pb.w_prior * j.transpose() * r;
    h(i + 6, i + 6) += pb.w_scale;
    g(i + 6) += pb.w_scale * st.sigma[k];
  }
}

State step(const State& st, const Eigen::VectorXd& delta, double factor) {
  State out = st;
  for (std::size_t k = 0; k < st.pose.size(); ++k) {
    const Vec6 d = factor * delta.segment<6>(static_cast<Eigen::Index>(7 * k));
    out.pose[k] = st.pose[k].perturbed(d);
    out.sigma[k] = st.sigma[k] + factor * delta(static_cast<Eigen::Index>(7 * k + 6));
  }
  return out;
}

}  // namespace

OptimizeReport KeyframeGraph::optimize_component(std::size_t component,
                                                 const OptimizeConfig& cfg) {
  const auto comps = components();
  if (component >= comps.size()) throw Error("optimize_component: no such component");
  const auto& ids = comps[component];
  OptimizeReport rep;
  if (ids.size() < 2) return rep;

  std::vector<std::size_t> node_idx;
  for (std::int64_t id : ids) node_idx.push_back(*index_of(id));
  auto local = [&](std::int64_t id) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };

  Problem pb;
  pb.w_prior = cfg.w_prior;
  pb.w_scale = cfg.w_scale_prior;
  State st;
  for (std::size_t i : node_idx) {
    pb.measured.push_back(nodes_[i].measured_pose);
    st.pose.push_back(nodes_[i].pose);
    st.sigma.push_back(0.0);
  }
  for (const Edge& e : edges_) {
    if (!std::binary_search(ids.begin(), ids.end(), e.a)) continue;
    EdgeTerm t;
    t.a = local(e.a);
    t.b = local(e.b);
    const Keyframe& ka = nodes_[node_idx[t.a]];
    const Keyframe& kb = nodes_[node_idx[t.b]];
    for (const Match& m : e.matches) {
      const Vec3f& p = ka.points[static_cast<std::size_t>(m.keyframe_pixel)];
      const Vec3f& q = kb.points[static_cast<std::size_t>(m.frame_pixel)];
      if (!p.allFinite() || !q.allFinite()) continue;
      t.pa.push_back(p.cast<double>());
      t.pb.push_back(q.cast<double>());
    }
    if (t.pa.empty()) continue;
    t.weight = 1.0 / static_cast<double>(t.pa.size());
    pb.terms.push_back(std::move(t));
  }

  Cost cost = evaluate(pb, st);
  rep.initial_cost = cost.total;
  rep.initial_match_cost = cost.match;
  rep.converged = false;
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  for (int it = 0; it < cfg.max_iters; ++it) {
    build_normal_equations(pb, st, h, g);
    h.diagonal().array() += 1e-12;
    const Eigen::VectorXd delta = -h.ldlt().solve(g);
    if (!delta.allFinite()) break;
    double factor = 1.0;
    bool accepted = false;
    for (int k = 0; k <= cfg.max_halvings; ++k, factor *= 0.5) {
      State cand = step(st, delta, factor);
      const Cost c = evaluate(pb, cand);
      if (c.total <= cost.total) {
        const double decrease = cost.total - c.total;
        st = std::move(cand);
        const double prev = cost.total;
        cost = c;
        accepted = true;
        rep.iterations = it + 1;
        if (decrease <= cfg.min_relative_decrease * std::max(prev, 1e-300)) rep.converged = true;
        break;
      }
    }
    if (!accepted) {
      rep.converged = true;  // no descent direction left at this precision
      break;
    }
    if (rep.converged) break;
  }
  rep.final_cost = cost.total;
  rep.final_match_cost = cost.match;

  for (std::size_t k = 0; k < node_idx.size(); ++k) {
    Keyframe& kf = nodes_[node_idx[k]];
    kf.pose = st.pose[k];
    if (st.sigma[k] != 0.0) {
      const double s = std::exp(st.sigma[k]);
      for (Vec3f& p : kf.points) p *= static_cast<float>(s);
      kf.scale *= s;
    }
  }
  return rep;
}

RigidTransform align_to_world(std::span<const RigidTransform> measured,
                              std::span<const RigidTransform> optimized) {
  if (measured.empty() || measured.size() != optimized.size()) {
    throw Error("align_to_world: need equal-length non-empty pose lists");
  }
  const std::size_t n = measured.size();
  if (n == 1) return measured[0] * optimized[0].inverse();

  Vec3 cm = Vec3::Zero();
  Vec3 co = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cm += measured[i].translation();
    co += optimized[i].translation();
  }
  cm /= static_cast<double>(n);
  co /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dm = measured[i].translation() - cm;
    const Vec3 dopt = optimized[i].translation() - co;
    cov += dopt * dm.transpose();
    spread += dopt * dopt.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(spread);
  const Vec3 ev = eig.eigenvalues();  // ascending
  const bool degenerate = !(ev(2) > 1e-12) || ev(1) < 1e-6 * ev(2);

  Mat3 r;
  if (!degenerate) {
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
    r = v * d * u.transpose();
  } else {
    Mat3 sum = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      sum += measured[i].rotation() * optimized[i].rotation().transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return {r, cm - r * co};
}

RigidTransform KeyframeGraph::align_component(std::size_t component) {
  const auto comps = components();
  if (component >= comps.size()) throw Error("align_component: no such component");
  std::vector<RigidTransform> meas;
  std::vector<RigidTransform> opt;
  std::vector<std::size_t> idx;
  for (std::int64_t id : comps[component]) {
    const std::size_t i = *index_of(id);
    idx.push_back(i);
    meas.push_back(nodes_[i].measured_pose);
    opt.push_back(nodes_[i].pose);
  }
  const RigidTransform x = align_to_world(meas, opt);
  for (std::size_t i : idx) nodes_[i].pose = x * nodes_[i].pose;
  return x;
}

void KeyframeGraph::dump(std::ostream& os) const {
  char buf[512];
  os << "# keyframe id tx ty tz qx qy qz qw scale mean_conf\n";
  for (const Keyframe& kf : nodes_) {
    const Vec3& t = kf.pose.translation();
    const Eigen::Quaterniond q = kf.pose.quaternion();
    std::snprintf(buf, sizeof buf, "keyframe %lld %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  static_cast<long long>(kf.id), t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w(),
                  kf.scale, kf.mean_conf);
    os << buf;
  }
  os << "# edge a b match_fraction\n";
  for (const Edge& e : edges_) {
    std::snprintf(buf, sizeof buf, "edge %lld %lld %.17g\n", static_cast<long long>(e.a),
                  static_cast<long long>(e.b), e.match_fraction);
    os << buf;
  }
  os << "# component ids...\n";
  for (const auto& c : components()) {
    os << "component";
    for (std::int64_t id : c) os << ' ' << id;
    os << '\n';
  }
}

RecoveryBuffer::RecoveryBuffer(std::shared_ptr<const Keyframe> last_keyframe) {
  if (!last_keyframe) throw Error("RecoveryBuffer: needs an initial keyframe");
  push(std::move(last_keyframe));
}

const RecoveryEntry& RecoveryBuffer::best() const {
  std::size_t best = entries_.size() - 1;
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (entries_[i].mean_conf > entries_[best].mean_conf) best = i;
  }
  return entries_[best];
}

void RecoveryBuffer::push(std::shared_ptr<const Keyframe> frame) {
  const double mc = frame->mean_conf;
  entries_.push_back({std::move(frame), mc});
  while (entries_.size() > kCapacity) entries_.pop_front();
}

std::shared_ptr<const Keyframe> recovery_step(RecoveryBuffer& buf,
                                              std::shared_ptr<const Keyframe> incoming) {
  auto ref = buf.best().frame;
  buf.push(std::move(incoming));
  return ref;
}

}  // namespace oaf
