#include <stdio.h>
#include <cuda.h>
int main(void) {
  int host[4] = {1, 2, 3, 4};
  int *dev;
  cudaError_t err;
  cudaMalloc(&dev, sizeof(host));
  err = cudaMemcpy(dev, host, sizeof(host), cudaMemcpyDeviceToHost);
  printf("%s\n", cudaGetErrorString(err));
  cudaFree(dev);
  return 0;
}
