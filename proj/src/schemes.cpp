#include "stosym/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stosym {

using nlohmann::json;

namespace {

constexpr double kOrthTol = 1e-12;

void check_gauge_steps(const std::vector<Eigen::MatrixXd>& b_steps,
                       const DiscretizedNoise& noise)
{
    if (static_cast<int>(b_steps.size()) != noise.steps())
        throw std::invalid_argument("one gauge step per increment is required");
    const int k = noise.k();
    for (const Eigen::MatrixXd& b : b_steps) {
        if (b.rows() != k || b.cols() != k)
            throw std::invalid_argument("gauge step has the wrong shape");
        const Eigen::MatrixXd gram =
            b.transpose() * b - Eigen::MatrixXd::Identity(k, k);
        if (gram.cwiseAbs().maxCoeff() > kOrthTol)
            throw std::invalid_argument("gauge step is not orthogonal");
    }
}

CadlagPath solve_with(const DiffusionCoefficients& co,
                      const DiscretizedNoise& noise, const Eigen::VectorXd& x0,
                      bool milstein)
{
    noise.validate();
    if (!co.mu || !co.sigma)
        throw std::invalid_argument(
            "the drift and diffusion evaluators are required");
    if (co.k != noise.k())
        throw std::invalid_argument(
            "the noise has the wrong number of driving components");
    if (x0.size() != co.m)
        throw std::invalid_argument("state dimensions disagree");
    if (milstein && !noise.has_areas())
        throw std::invalid_argument("the area block is required");

    Eigen::MatrixXd values(noise.steps() + 1, co.m);
    values.row(0) = x0.transpose();
    Eigen::VectorXd x = x0;
    for (int l = 0; l < noise.steps(); ++l) {
        const double dt = noise.times[l + 1] - noise.times[l];
        const Eigen::VectorXd dw = noise.dw.row(l).transpose();
        x = milstein ? milstein_map(co, x, dt, dw, noise.dww[l])
                     : euler_map(co, x, dt, dw);
        values.row(l + 1) = x.transpose();
    }
    return make_path(GroupDescriptor::additive(co.m), PathStyle::GridSampled,
                     noise.times, std::move(values));
}

}  // namespace

void DiscretizedNoise::validate() const
{
    if (times.size() < 2)
        throw std::invalid_argument("a noise grid needs at least two times");
    if (times.front() != 0.0)
        throw std::invalid_argument("the noise grid must start at time zero");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("noise times must strictly increase");
    if (dw.rows() != static_cast<Eigen::Index>(times.size()) - 1)
        throw std::invalid_argument(
            "increment rows and grid steps do not match");
    if (dw.cols() < 1)
        throw std::invalid_argument("at least one driving component is needed");
    if (!dw.allFinite())
        throw std::invalid_argument("increments must be finite");
    if (!dww.empty()) {
        if (static_cast<int>(dww.size()) != steps())
            throw std::invalid_argument(
                "area blocks and grid steps do not match");
        for (const Eigen::MatrixXd& a : dww) {
            if (a.rows() != k() || a.cols() != k())
                throw std::invalid_argument("area block has the wrong shape");
            if (!a.allFinite())
                throw std::invalid_argument("area blocks must be finite");
        }
    }
}

std::vector<double> uniform_grid(double horizon, int steps)
{
    if (!(horizon > 0.0))
        throw std::invalid_argument("the horizon must be positive");
    if (steps < 1) throw std::invalid_argument("at least one step is needed");
    std::vector<double> times(steps + 1);
    for (int l = 0; l <= steps; ++l)
        times[l] = horizon * static_cast<double>(l) / steps;
    return times;
}

DiscretizedNoise sample_brownian_increments(int k,
                                            const std::vector<double>& times,
                                            Rng& rng)
{
    if (k < 1)
        throw std::invalid_argument("at least one driving component is needed");
    DiscretizedNoise noise;
    noise.times = times;
    noise.dw.resize(static_cast<int>(times.size()) - 1, k);
    for (int l = 0; l < noise.dw.rows(); ++l) {
        const double sd = std::sqrt(times[l + 1] - times[l]);
        for (int j = 0; j < k; ++j) noise.dw(l, j) = sd * rng.normal();
    }
    noise.validate();
    return noise;
}

DiscretizedNoise with_scalar_areas(const DiscretizedNoise& noise)
{
    noise.validate();
    if (noise.k() != 1)
        throw std::invalid_argument(
            "the closed-form area needs one driving component");
    DiscretizedNoise out = noise;
    out.dww.assign(noise.steps(), Eigen::MatrixXd(1, 1));
    for (int l = 0; l < noise.steps(); ++l) {
        const double dt = noise.times[l + 1] - noise.times[l];
        const double dw = noise.dw(l, 0);
        out.dww[l](0, 0) = 0.5 * (dw * dw - dt);
    }
    return out;
}

DiscretizedNoise coarsen(const DiscretizedNoise& noise, int factor)
{
    noise.validate();
    if (factor < 1)
        throw std::invalid_argument("the coarsening factor must be positive");
    if (noise.steps() % factor != 0)
        throw std::invalid_argument(
            "the coarsening factor does not divide the step count");

    const int k = noise.k();
    const int coarse = noise.steps() / factor;
    DiscretizedNoise out;
    out.times.resize(coarse + 1);
    out.dw.setZero(coarse, k);
    if (noise.has_areas()) out.dww.assign(coarse, Eigen::MatrixXd::Zero(k, k));

    out.times[0] = noise.times[0];
    for (int l = 0; l < coarse; ++l) {
        out.times[l + 1] = noise.times[(l + 1) * factor];
        // running sum a and, when areas ride along, the group product
        //   area += fine area + (increment) (sum so far)^T
        // which keeps the block equal to the coarse-step iterated integral
        Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
        for (int s = 0; s < factor; ++s) {
            const int i = l * factor + s;
            const Eigen::VectorXd dwi = noise.dw.row(i).transpose();
            if (noise.has_areas())
                out.dww[l] += noise.dww[i] + dwi * a.transpose();
            a += dwi;
        }
        out.dw.row(l) = a.transpose();
    }
    return out;
}

CadlagPath euler_solve(const DiffusionCoefficients& co,
                       const DiscretizedNoise& noise, const Eigen::VectorXd& x0)
{
    return solve_with(co, noise, x0, false);
}

CadlagPath milstein_solve(const DiffusionCoefficients& co,
                          const DiscretizedNoise& noise,
                          const Eigen::VectorXd& x0)
{
    return solve_with(co, noise, x0, true);
}

DiscretizedNoise levy_area(const CadlagPath& fine_w,
                           const std::vector<double>& coarse_times)
{
    fine_w.validate();
    if (fine_w.desc.kind() != GroupKind::Additive)
        throw std::invalid_argument(
            "the fine path must live on an additive group");
    if (fine_w.style != PathStyle::GridSampled)
        throw std::invalid_argument("the fine path must be grid sampled");
    if (coarse_times.size() < 2)
        throw std::invalid_argument("a noise grid needs at least two times");

    // every coarse time must land on a fine grid point, in order
    std::vector<int> idx(coarse_times.size());
    int j = 0;
    for (std::size_t l = 0; l < coarse_times.size(); ++l) {
        const double t = coarse_times[l];
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        while (j < fine_w.points() && fine_w.times[j] < t - tol) ++j;
        if (j >= fine_w.points() || std::abs(fine_w.times[j] - t) > tol)
            throw std::invalid_argument("grids misaligned");
        idx[l] = j;
    }
    if (idx[0] != 0)
        throw std::invalid_argument(
            "the coarse grid must start at the fine path's origin");
    for (std::size_t l = 0; l + 1 < idx.size(); ++l)
        if (idx[l] >= idx[l + 1])
            throw std::invalid_argument("noise times must strictly increase");

    const int k = fine_w.dim();
    const int coarse = static_cast<int>(coarse_times.size()) - 1;
    DiscretizedNoise out;
    out.times.resize(coarse + 1);
    for (int l = 0; l <= coarse; ++l) out.times[l] = fine_w.times[idx[l]];
    out.dw.resize(coarse, k);
    out.dww.assign(coarse, Eigen::MatrixXd::Zero(k, k));
    for (int l = 0; l < coarse; ++l) {
        const int i0 = idx[l];
        const int i1 = idx[l + 1];
        out.dw.row(l) = fine_w.values.row(i1) - fine_w.values.row(i0);
        Eigen::MatrixXd& a = out.dww[l];
        for (int s = i0; s < i1; ++s) {
            const Eigen::VectorXd left =
                (fine_w.values.row(s) - fine_w.values.row(i0)).transpose();
            const Eigen::VectorXd step =
                (fine_w.values.row(s + 1) - fine_w.values.row(s)).transpose();
            a += step * left.transpose();
        }
    }
    out.validate();
    return out;
}

DiscretizedNoise gauge_rotate_euler(const std::vector<Eigen::MatrixXd>& b_steps,
                                    const DiscretizedNoise& noise)
{
    noise.validate();
    check_gauge_steps(b_steps, noise);
    DiscretizedNoise out;
    out.times = noise.times;
    out.dw.resizeLike(noise.dw);
    for (int l = 0; l < noise.steps(); ++l)
        out.dw.row(l) = (b_steps[l] * noise.dw.row(l).transpose()).transpose();
    return out;
}

DiscretizedNoise gauge_rotate_milstein(
    const std::vector<Eigen::MatrixXd>& b_steps, const DiscretizedNoise& noise)
{
    noise.validate();
    if (!noise.has_areas())
        throw std::invalid_argument("the area block is required");
    check_gauge_steps(b_steps, noise);
    DiscretizedNoise out = gauge_rotate_euler(b_steps, noise);
    out.dww.resize(noise.steps());
    for (int l = 0; l < noise.steps(); ++l)
        out.dww[l] = b_steps[l] * noise.dww[l] * b_steps[l].transpose();
    return out;
}

CadlagPath milstein_group_path(const DiscretizedNoise& noise)
{
    noise.validate();
    if (!noise.has_areas())
        throw std::invalid_argument("the area block is required");

    const int k = noise.k();
    const GroupDescriptor desc = GroupDescriptor::milstein(k);
    Eigen::MatrixXd values(noise.steps() + 1, desc.coordinate_dim());
    GroupElement z = identity(desc);
    values.row(0) = z.coords.transpose();
    for (int l = 0; l < noise.steps(); ++l) {
        Eigen::VectorXd delta(desc.coordinate_dim());
        delta[0] = noise.times[l + 1] - noise.times[l];
        delta.segment(1, k) = noise.dw.row(l).transpose();
        for (int p = 0; p < k; ++p)
            for (int q = 0; q < k; ++q)
                delta[1 + k + p * k + q] = noise.dww[l](p, q);
        z = mul(element(desc, delta), z);
        values.row(l + 1) = z.coords.transpose();
    }
    return make_path(desc, PathStyle::GridSampled, noise.times,
                     std::move(values));
}

std::string noise_to_csv(const DiscretizedNoise& noise)
{
    noise.validate();
    std::ostringstream os;
    os.precision(17);
    os << "step,alpha,beta,value\n";
    for (std::size_t l = 0; l < noise.times.size(); ++l)
        os << l << ",-1,-1," << noise.times[l] << "\n";
    for (int l = 0; l < noise.steps(); ++l) {
        for (int a = 0; a < noise.k(); ++a)
            os << l + 1 << "," << a << ",-1," << noise.dw(l, a) << "\n";
        if (noise.has_areas())
            for (int a = 0; a < noise.k(); ++a)
                for (int b = 0; b < noise.k(); ++b)
                    os << l + 1 << "," << a << "," << b << ","
                       << noise.dww[l](a, b) << "\n";
    }
    return os.str();
}

DiscretizedNoise noise_from_csv(const std::string& csv)
{
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("csv: empty input");

    struct Row {
        int step, alpha, beta;
        double value;
    };
    std::vector<Row> rows;
    int max_step = -1;
    int max_alpha = -1;
    bool any_area = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4)
            throw std::invalid_argument("csv: wrong column count");
        Row r{std::stoi(cells[0]), std::stoi(cells[1]), std::stoi(cells[2]),
              std::stod(cells[3])};
        if (r.step < 0 || r.alpha < -1 || r.beta < -1)
            throw std::invalid_argument("csv: bad row index");
        max_step = std::max(max_step, r.step);
        max_alpha = std::max(max_alpha, r.alpha);
        if (r.beta >= 0) any_area = true;
        rows.push_back(r);
    }
    if (max_step < 1 || max_alpha < 0)
        throw std::invalid_argument("csv: no increment rows");

    const int steps = max_step;
    const int k = max_alpha + 1;
    DiscretizedNoise noise;
    noise.times.assign(steps + 1,
                       std::numeric_limits<double>::quiet_NaN());
    noise.dw.setZero(steps, k);
    if (any_area) noise.dww.assign(steps, Eigen::MatrixXd::Zero(k, k));
    for (const Row& r : rows) {
        if (r.alpha == -1 && r.beta == -1) {
            if (r.step > steps) throw std::invalid_argument("csv: bad row index");
            noise.times[r.step] = r.value;
        } else if (r.beta == -1) {
            if (r.step < 1 || r.alpha >= k)
                throw std::invalid_argument("csv: bad row index");
            noise.dw(r.step - 1, r.alpha) = r.value;
        } else {
            if (r.step < 1 || r.alpha >= k || r.beta >= k)
                throw std::invalid_argument("csv: bad row index");
            noise.dww[r.step - 1](r.alpha, r.beta) = r.value;
        }
    }
    for (double t : noise.times)
        if (std::isnan(t)) throw std::invalid_argument("csv: missing grid time");
    noise.validate();
    return noise;
}

std::string noise_to_json(const DiscretizedNoise& noise)
{
    noise.validate();
    json j;
    j["times"] = noise.times;
    json dw = json::array();
    for (int l = 0; l < noise.steps(); ++l) {
        json row = json::array();
        for (int a = 0; a < noise.k(); ++a) row.push_back(noise.dw(l, a));
        dw.push_back(row);
    }
    j["dw"] = dw;
    if (noise.has_areas()) {
        json dww = json::array();
        for (const Eigen::MatrixXd& m : noise.dww) {
            json block = json::array();
            for (int a = 0; a < m.rows(); ++a) {
                json row = json::array();
                for (int b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
                block.push_back(row);
            }
            dww.push_back(block);
        }
        j["dww"] = dww;
    }
    return j.dump();
}

DiscretizedNoise noise_from_json(const std::string& text)
{
    const json j = json::parse(text);
    DiscretizedNoise noise;
    noise.times = j.at("times").get<std::vector<double>>();
    const json& dw = j.at("dw");
    const int steps = static_cast<int>(dw.size());
    if (steps < 1) throw std::invalid_argument("json: no increment rows");
    const int k = static_cast<int>(dw.at(0).size());
    noise.dw.resize(steps, k);
    for (int l = 0; l < steps; ++l) {
        if (static_cast<int>(dw.at(l).size()) != k)
            throw std::invalid_argument("json: ragged increments");
        for (int a = 0; a < k; ++a) noise.dw(l, a) = dw.at(l).at(a).get<double>();
    }
    if (j.contains("dww")) {
        const json& dww = j.at("dww");
        if (static_cast<int>(dww.size()) != steps)
            throw std::invalid_argument("json: ragged area blocks");
        noise.dww.assign(steps, Eigen::MatrixXd(k, k));
        for (int l = 0; l < steps; ++l)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    noise.dww[l](a, b) = dww.at(l).at(a).at(b).get<double>();
    }
    noise.validate();
    return noise;
}

}  // namespace stosym
