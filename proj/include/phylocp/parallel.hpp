#ifndef PHYLOCP_PARALLEL_HPP
#define PHYLOCP_PARALLEL_HPP

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phylocp {

/// Worker threads for later parallel regions; 0 selects every processor.
inline void set_thread_count(int threads)
{
#ifdef _OPENMP
  omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
#else
  (void)threads;
#endif
}

inline int thread_count()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline bool in_parallel_region()
{
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

} // namespace phylocp

#endif
