#include "stosym/groups.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stosym {

GroupDescriptor GroupDescriptor::additive(int n)
{
    if (n <= 0) throw std::invalid_argument("additive: n must be positive");
    GroupDescriptor d;
    d.kind_ = GroupKind::Additive;
    d.size_ = n;
    return d;
}

GroupDescriptor GroupDescriptor::general_linear(int k)
{
    if (k <= 0) throw std::invalid_argument("general_linear: k must be positive");
    GroupDescriptor d;
    d.kind_ = GroupKind::GeneralLinear;
    d.size_ = k;
    return d;
}

GroupDescriptor GroupDescriptor::product(std::vector<GroupDescriptor> factors)
{
    if (factors.empty())
        throw std::invalid_argument("product: needs at least one factor");
    GroupDescriptor d;
    d.kind_ = GroupKind::Product;
    d.factors_ = std::move(factors);
    return d;
}

GroupDescriptor GroupDescriptor::milstein(int k)
{
    if (k <= 0) throw std::invalid_argument("milstein: k must be positive");
    GroupDescriptor d;
    d.kind_ = GroupKind::Milstein;
    d.size_ = k;
    return d;
}

int GroupDescriptor::coordinate_dim() const
{
    switch (kind_) {
        case GroupKind::Additive: return size_;
        case GroupKind::GeneralLinear: return size_ * size_;
        case GroupKind::Milstein: return 1 + size_ + size_ * size_;
        case GroupKind::Product: {
            int n = 0;
            for (const auto& f : factors_) n += f.coordinate_dim();
            return n;
        }
    }
    return 0;
}

bool GroupDescriptor::operator==(const GroupDescriptor& other) const
{
    if (kind_ != other.kind_ || size_ != other.size_) return false;
    if (factors_.size() != other.factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i)
        if (factors_[i] != other.factors_[i]) return false;
    return true;
}

std::string GroupDescriptor::describe() const
{
    std::ostringstream os;
    switch (kind_) {
        case GroupKind::Additive: os << "Additive(" << size_ << ")"; break;
        case GroupKind::GeneralLinear: os << "GL(" << size_ << ")"; break;
        case GroupKind::Milstein: os << "Milstein(" << size_ << ")"; break;
        case GroupKind::Product: {
            os << "Product(";
            for (std::size_t i = 0; i < factors_.size(); ++i) {
                if (i) os << ", ";
                os << factors_[i].describe();
            }
            os << ")";
            break;
        }
    }
    return os.str();
}

std::vector<int> product_offsets(const GroupDescriptor& desc)
{
    std::vector<int> off;
    int at = 0;
    for (const auto& f : desc.factors()) {
        off.push_back(at);
        at += f.coordinate_dim();
    }
    return off;
}

Eigen::MatrixXd gl_matrix(const GroupDescriptor& desc,
                          const Eigen::VectorXd& coords)
{
    const int k = desc.size();
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = coords[i * k + j];
    return m;
}

Eigen::VectorXd gl_coords(const Eigen::MatrixXd& m)
{
    const int k = static_cast<int>(m.rows());
    Eigen::VectorXd c(k * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) c[i * k + j] = m(i, j);
    return c;
}

GroupElement identity(const GroupDescriptor& desc)
{
    Eigen::VectorXd c = Eigen::VectorXd::Zero(desc.coordinate_dim());
    switch (desc.kind()) {
        case GroupKind::Additive: break;
        case GroupKind::GeneralLinear: {
            const int k = desc.size();
            for (int i = 0; i < k; ++i) c[i * k + i] = 1.0;
            break;
        }
        case GroupKind::Milstein: break;  // identity is (0, 0, 0)
        case GroupKind::Product: {
            const auto off = product_offsets(desc);
            for (std::size_t i = 0; i < desc.factors().size(); ++i) {
                const auto sub = identity(desc.factors()[i]);
                c.segment(off[i], sub.coords.size()) = sub.coords;
            }
            break;
        }
    }
    return GroupElement{desc, std::move(c)};
}

GroupElement element(const GroupDescriptor& desc, const Eigen::VectorXd& coords)
{
    if (coords.size() != desc.coordinate_dim())
        throw std::invalid_argument("element: coordinate length mismatch for " +
                                    desc.describe());
    return GroupElement{desc, coords};
}

namespace {

void check_same(const GroupElement& a, const GroupElement& b)
{
    if (a.desc != b.desc)
        throw std::invalid_argument("group operation on mismatched descriptors: " +
                                    a.desc.describe() + " vs " + b.desc.describe());
}

}  // namespace

GroupElement mul(const GroupElement& a, const GroupElement& b)
{
    check_same(a, b);
    const auto& d = a.desc;
    Eigen::VectorXd c(d.coordinate_dim());
    switch (d.kind()) {
        case GroupKind::Additive: c = a.coords + b.coords; break;
        case GroupKind::GeneralLinear:
            c = gl_coords(gl_matrix(d, a.coords) * gl_matrix(d, b.coords));
            break;
        case GroupKind::Milstein: {
            // (t1, a1, b1) * (t2, a2, b2)
            //   = (t1 + t2, a1 + a2, b3),  b3[p,q] = a2[q] a1[p] + b1 + b2.
            // The cross term makes jumps of a cumulated (t, W, int W dW) path
            // come out as (dt, dW, int (W - W_left) dW) over each step.
            const int k = d.size();
            c[0] = a.coords[0] + b.coords[0];
            c.segment(1, k) = a.coords.segment(1, k) + b.coords.segment(1, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) {
                    const int at = 1 + k + p * k + q;
                    c[at] = b.coords[1 + q] * a.coords[1 + p] + a.coords[at] +
                            b.coords[at];
                }
            break;
        }
        case GroupKind::Product: {
            const auto off = product_offsets(d);
            for (std::size_t i = 0; i < d.factors().size(); ++i) {
                const auto& f = d.factors()[i];
                const int n = f.coordinate_dim();
                const auto sub =
                    mul(GroupElement{f, a.coords.segment(off[i], n)},
                        GroupElement{f, b.coords.segment(off[i], n)});
                c.segment(off[i], n) = sub.coords;
            }
            break;
        }
    }
    return GroupElement{d, std::move(c)};
}

GroupElement inv(const GroupElement& a, double det_tol)
{
    const auto& d = a.desc;
    Eigen::VectorXd c(d.coordinate_dim());
    switch (d.kind()) {
        case GroupKind::Additive: c = -a.coords; break;
        case GroupKind::GeneralLinear: {
            const Eigen::MatrixXd m = gl_matrix(d, a.coords);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
            const double det = lu.determinant();
            if (std::abs(det) <= det_tol)
                throw std::domain_error(
                    "inv: matrix is numerically singular (|det| = " +
                    std::to_string(std::abs(det)) + ")");
            c = gl_coords(lu.inverse());
            break;
        }
        case GroupKind::Milstein: {
            // (t, a, b)^{-1} = (-t, -a, -b + a (x) a).
            const int k = d.size();
            c[0] = -a.coords[0];
            c.segment(1, k) = -a.coords.segment(1, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q)
                    c[1 + k + p * k + q] = -a.coords[1 + k + p * k + q] +
                                           a.coords[1 + p] * a.coords[1 + q];
            break;
        }
        case GroupKind::Product: {
            const auto off = product_offsets(d);
            for (std::size_t i = 0; i < d.factors().size(); ++i) {
                const auto& f = d.factors()[i];
                const int n = f.coordinate_dim();
                const auto sub =
                    inv(GroupElement{f, a.coords.segment(off[i], n)}, det_tol);
                c.segment(off[i], n) = sub.coords;
            }
            break;
        }
    }
    return GroupElement{d, std::move(c)};
}

GroupElement jump(const GroupElement& after, const GroupElement& before,
                  double det_tol)
{
    return mul(after, inv(before, det_tol));
}

Eigen::MatrixXd right_translation_jacobian(const GroupDescriptor& desc,
                                           const Eigen::VectorXd& c)
{
    const int n = desc.coordinate_dim();
    if (c.size() != n)
        throw std::invalid_argument("right_translation_jacobian: bad coords");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    switch (desc.kind()) {
        case GroupKind::Additive: j.setIdentity(); break;
        case GroupKind::GeneralLinear: {
            // d(Z C)[i,j] / dZ[a,b] = delta(i,a) C[b,j]
            const int k = desc.size();
            for (int i = 0; i < k; ++i)
                for (int jj = 0; jj < k; ++jj)
                    for (int b = 0; b < k; ++b)
                        j(i * k + jj, i * k + b) = c[b * k + jj];
            break;
        }
        case GroupKind::Milstein: {
            const int k = desc.size();
            j(0, 0) = 1.0;
            for (int i = 0; i < k; ++i) j(1 + i, 1 + i) = 1.0;
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) {
                    const int row = 1 + k + p * k + q;
                    j(row, row) = 1.0;
                    // b3[p,q] picks up c_a[q] * z_a[p] from the cross term.
                    j(row, 1 + p) += c[1 + q];
                }
            break;
        }
        case GroupKind::Product: {
            const auto off = product_offsets(desc);
            for (std::size_t i = 0; i < desc.factors().size(); ++i) {
                const auto& f = desc.factors()[i];
                const int m = f.coordinate_dim();
                j.block(off[i], off[i], m, m) =
                    right_translation_jacobian(f, c.segment(off[i], m));
            }
            break;
        }
    }
    return j;
}

}  // namespace stosym
