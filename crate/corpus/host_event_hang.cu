#include <cuda.h>
int main(void) {
  cudaEvent_t never;
  cudaEventCreate(&never);
  cudaEventSynchronize(never);
  return 0;
}
