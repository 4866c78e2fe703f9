#include "dspace/metrics.hpp"

namespace dspace {

template std::vector<int> hungarian<double>(const MatrixX& cost);
template double ospa<double, 3>(const PointSet<double, 3>&, const PointSet<double, 3>&, const OspaParams&);
template double rmse<double, 3>(const PointSet<double, 3>&, const PointSet<double, 3>&);

}  // namespace dspace
