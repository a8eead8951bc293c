#include <cuda.h>
__global__ void k(void) {
}
int main(void) {
  cudaStream_t s;
  cudaEvent_t never;
  cudaStreamCreate(&s);
  cudaEventCreate(&never);
  cudaStreamWaitEvent(s, never, 0);
  k<<<1, 1, 0, s>>>();
  cudaStreamSynchronize(s);
  return 0;
}
