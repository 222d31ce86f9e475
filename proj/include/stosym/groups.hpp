#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stosym {

/// Matrix Lie groups used as driving-noise state spaces.  Elements are stored
/// as flat coordinate vectors:
///   Additive(n)       n coordinates, componentwise addition
///   GeneralLinear(k)  k*k coordinates, row major, matrix product
///   Product(f1,...)   concatenated factor coordinates
///   Milstein(k)       1 + k + k*k coordinates (time, increment, iterated
///                     integral block, row major (a,b) -> a*k+b)
enum class GroupKind { Additive, GeneralLinear, Product, Milstein };

class GroupDescriptor {
public:
    static GroupDescriptor additive(int n);
    static GroupDescriptor general_linear(int k);
    static GroupDescriptor product(std::vector<GroupDescriptor> factors);
    static GroupDescriptor milstein(int k);

    GroupKind kind() const { return kind_; }
    /// Dimension parameter: n for Additive, k for GeneralLinear/Milstein.
    int size() const { return size_; }
    const std::vector<GroupDescriptor>& factors() const { return factors_; }

    /// Length of the flat coordinate vector.
    int coordinate_dim() const;

    bool operator==(const GroupDescriptor& other) const;
    bool operator!=(const GroupDescriptor& o) const { return !(*this == o); }

    std::string describe() const;

private:
    GroupKind kind_ = GroupKind::Additive;
    int size_ = 0;
    std::vector<GroupDescriptor> factors_;
};

struct GroupElement {
    GroupDescriptor desc;
    Eigen::VectorXd coords;
};

GroupElement identity(const GroupDescriptor& desc);
GroupElement element(const GroupDescriptor& desc, const Eigen::VectorXd& coords);

/// Group product a * b.
GroupElement mul(const GroupElement& a, const GroupElement& b);

/// Group inverse; throws std::domain_error when a GeneralLinear block has
/// |det| <= det_tol.
GroupElement inv(const GroupElement& a, double det_tol = 1e-12);

/// Jump of a path between two states: after * inv(before).
GroupElement jump(const GroupElement& after, const GroupElement& before,
                  double det_tol = 1e-12);

/// Jacobian of z -> z * c for fixed c, as a matrix on flat coordinates.
/// Right translation is affine in z for every supported group, so the
/// result is exact.
Eigen::MatrixXd right_translation_jacobian(const GroupDescriptor& desc,
                                           const Eigen::VectorXd& c);

/// Flat row-major view of a GeneralLinear coordinate block.
Eigen::MatrixXd gl_matrix(const GroupDescriptor& desc,
                          const Eigen::VectorXd& coords);
Eigen::VectorXd gl_coords(const Eigen::MatrixXd& m);

/// Offsets of each factor block inside a Product coordinate vector.
std::vector<int> product_offsets(const GroupDescriptor& desc);

}  // namespace stosym
