#ifndef STM32F103_IRQS_H
#define STM32F103_IRQS_H

#define PERIPH_BASE (0x40000000UL)
#define APB1PERIPH_BASE PERIPH_BASE
#define APB2PERIPH_BASE (PERIPH_BASE + 0x00010000UL)
#define AHBPERIPH_BASE (PERIPH_BASE + 0x00020000UL)

typedef enum {
  WWDG_IRQn = 0,
  PVD_IRQn = 1,
  TAMPER_IRQn = 2,
  RTC_WKUP_IRQn = 3,
  DMA1_Channel1_IRQn = 11,
  TIM2_IRQn = 28,
  USART1_IRQn = 37,
  USART2_IRQn = 38,
  RTC_Alarm_IRQn = 41,
} IRQn_Type;

#endif /* STM32F103_IRQS_H */
