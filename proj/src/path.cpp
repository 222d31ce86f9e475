#include "stosym/path.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stosym {

using nlohmann::json;

int CadlagPath::index_at(double t) const
{
    if (times.empty() || t < times.front())
        throw std::invalid_argument("value_at: time precedes the path start");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return static_cast<int>(it - times.begin()) - 1;
}

Eigen::VectorXd CadlagPath::value_at(double t) const
{
    return values.row(index_at(t));
}

void CadlagPath::validate() const
{
    if (times.empty()) throw std::invalid_argument("path: no points");
    if (times.front() != 0.0)
        throw std::invalid_argument("path: must start at time zero");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("path: times must be strictly increasing");
    if (values.rows() != static_cast<Eigen::Index>(times.size()))
        throw std::invalid_argument("path: value rows do not match times");
    if (values.cols() != desc.coordinate_dim())
        throw std::invalid_argument("path: coordinate width does not match " +
                                    desc.describe());
    if (is_jump.size() != times.size())
        throw std::invalid_argument("path: jump flags do not match times");
    if (is_jump.front())
        throw std::invalid_argument("path: first point cannot be a jump");
    if (style == PathStyle::DiscreteJump)
        for (std::size_t i = 1; i < is_jump.size(); ++i)
            if (!is_jump[i])
                throw std::invalid_argument(
                    "path: discrete-jump style requires every step to jump");
}

CadlagPath make_path(GroupDescriptor desc, PathStyle style,
                     std::vector<double> times, Eigen::MatrixXd values,
                     std::vector<std::uint8_t> is_jump)
{
    CadlagPath p;
    p.desc = std::move(desc);
    p.style = style;
    p.times = std::move(times);
    p.values = std::move(values);
    if (is_jump.empty()) {
        is_jump.assign(p.times.size(),
                       style == PathStyle::DiscreteJump ? 1 : 0);
        if (!is_jump.empty()) is_jump[0] = 0;
    }
    p.is_jump = std::move(is_jump);
    p.validate();
    return p;
}

std::string path_to_csv(const CadlagPath& p)
{
    std::ostringstream os;
    os.precision(17);
    os << "t";
    for (int j = 0; j < p.dim(); ++j) os << ",coord_" << j;
    os << "\n";
    for (int i = 0; i < p.points(); ++i) {
        os << p.times[i];
        for (int j = 0; j < p.dim(); ++j) os << "," << p.values(i, j);
        os << "\n";
    }
    return os.str();
}

CadlagPath path_from_csv(const GroupDescriptor& desc, PathStyle style,
                         const std::string& csv)
{
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("csv: empty input");
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != static_cast<std::size_t>(desc.coordinate_dim()) + 1)
            throw std::invalid_argument("csv: wrong column count");
        times.push_back(row[0]);
        row.erase(row.begin());
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd values(rows.size(), desc.coordinate_dim());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < desc.coordinate_dim(); ++j)
            values(i, j) = rows[i][j];
    return make_path(desc, style, std::move(times), std::move(values));
}

namespace {

json descriptor_json(const GroupDescriptor& d)
{
    json j;
    switch (d.kind()) {
        case GroupKind::Additive:
            j = {{"kind", "additive"}, {"n", d.size()}};
            break;
        case GroupKind::GeneralLinear:
            j = {{"kind", "general_linear"}, {"k", d.size()}};
            break;
        case GroupKind::Milstein:
            j = {{"kind", "milstein"}, {"k", d.size()}};
            break;
        case GroupKind::Product: {
            json f = json::array();
            for (const auto& x : d.factors()) f.push_back(descriptor_json(x));
            j = {{"kind", "product"}, {"factors", f}};
            break;
        }
    }
    return j;
}

GroupDescriptor descriptor_parse(const json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "additive")
        return GroupDescriptor::additive(j.at("n").get<int>());
    if (kind == "general_linear")
        return GroupDescriptor::general_linear(j.at("k").get<int>());
    if (kind == "milstein")
        return GroupDescriptor::milstein(j.at("k").get<int>());
    if (kind == "product") {
        std::vector<GroupDescriptor> f;
        for (const auto& x : j.at("factors")) f.push_back(descriptor_parse(x));
        return GroupDescriptor::product(std::move(f));
    }
    throw std::invalid_argument("descriptor: unknown kind '" + kind + "'");
}

}  // namespace

std::string descriptor_to_json(const GroupDescriptor& d)
{
    return descriptor_json(d).dump();
}

GroupDescriptor descriptor_from_json(const std::string& text)
{
    return descriptor_parse(json::parse(text));
}

std::string path_to_json(const CadlagPath& p)
{
    json j;
    j["descriptor"] = descriptor_json(p.desc);
    j["style"] =
        p.style == PathStyle::DiscreteJump ? "discrete_jump" : "grid_sampled";
    j["times"] = p.times;
    json rows = json::array();
    for (int i = 0; i < p.points(); ++i) {
        json row = json::array();
        for (int c = 0; c < p.dim(); ++c) row.push_back(p.values(i, c));
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    json jumps = json::array();
    for (int i = 0; i < p.points(); ++i)
        if (p.is_jump[i]) jumps.push_back(i);
    j["jump_rows"] = std::move(jumps);
    return j.dump();
}

CadlagPath path_from_json(const std::string& text)
{
    const json j = json::parse(text);
    const auto desc = descriptor_parse(j.at("descriptor"));
    const std::string style = j.at("style").get<std::string>();
    if (style != "discrete_jump" && style != "grid_sampled")
        throw std::invalid_argument("path: unknown style '" + style + "'");
    std::vector<double> times = j.at("times").get<std::vector<double>>();
    const auto& rows = j.at("values");
    Eigen::MatrixXd values(rows.size(), desc.coordinate_dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != static_cast<std::size_t>(desc.coordinate_dim()))
            throw std::invalid_argument("path: value row width mismatch");
        for (int c = 0; c < desc.coordinate_dim(); ++c)
            values(i, c) = row[c].get<double>();
    }
    std::vector<std::uint8_t> flags(times.size(), 0);
    for (const auto& idx : j.at("jump_rows"))
        flags.at(idx.get<std::size_t>()) = 1;
    return make_path(desc,
                     style == "discrete_jump" ? PathStyle::DiscreteJump
                                              : PathStyle::GridSampled,
                     std::move(times), std::move(values), std::move(flags));
}

}  // namespace stosym
